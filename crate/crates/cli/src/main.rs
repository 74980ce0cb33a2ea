fn main() {
    std::process::exit(dualwave_cli::main_with_args(std::env::args_os()));
}
