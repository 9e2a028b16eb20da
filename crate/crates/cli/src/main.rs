fn main() {
    std::process::exit(vanet_cli::main_with_args(std::env::args_os()));
}
