fn main() {
    std::process::exit(scarlab::cli::main_with_args(std::env::args_os()));
}
