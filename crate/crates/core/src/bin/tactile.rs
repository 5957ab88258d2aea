fn main() {
    std::process::exit(tactile_core::cli::main_with_args(std::env::args_os()));
}
