fn main() {
    std::process::exit(trisetting::cli::main_with_args(std::env::args_os()));
}
