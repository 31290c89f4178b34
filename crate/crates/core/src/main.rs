fn main() {
    std::process::exit(fitz_core::cli::run_command(std::env::args_os()));
}
