fn main() {
    std::process::exit(hypbound::cli::main_with_args(std::env::args_os()));
}
