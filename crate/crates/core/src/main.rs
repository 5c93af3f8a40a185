fn main() {
    std::process::exit(smxim::cli::main_with_args(std::env::args_os()));
}
