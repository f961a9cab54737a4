fn main() {
    std::process::exit(equiaffine::cli::main_with_args(std::env::args_os()));
}
