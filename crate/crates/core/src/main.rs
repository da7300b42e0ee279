fn main() {
    std::process::exit(dephasim::cli::main_with_args(std::env::args_os()));
}
