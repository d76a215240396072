fn main() {
    std::process::exit(skelcov::cli::main_with_args(std::env::args_os()));
}
