fn main() {
    std::process::exit(conformal_cli::main_with_args(std::env::args_os()));
}
