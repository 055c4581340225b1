fn main() {
    std::process::exit(compop::cli::main_with_args(std::env::args_os()));
}
