fn main() {
    std::process::exit(uslads_cli::run_from_args(std::env::args_os()));
}
