fn main() {
    std::process::exit(mls_cli::run(std::env::args_os()));
}
