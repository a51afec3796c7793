fn main() {
    std::process::exit(diamond_heat_cli::main_with_args(std::env::args_os()));
}
