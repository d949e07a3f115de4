fn main() {
    std::process::exit(phqm::cli::main_with_args(std::env::args_os()));
}
