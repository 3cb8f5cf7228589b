fn main() {
    std::process::exit(samplebased::cli::main_with(std::env::args_os()));
}
