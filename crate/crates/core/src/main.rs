fn main() {
    std::process::exit(condgreedy::cli::main_with_args(std::env::args_os()));
}
