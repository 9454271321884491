fn main() {
    std::process::exit(trepac::cli::main_with_args(std::env::args_os()));
}
