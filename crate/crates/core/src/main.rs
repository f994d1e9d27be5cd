fn main() {
    std::process::exit(ftau::cli::main_with_args(std::env::args_os()));
}
