fn main() {
    std::process::exit(certground_cli::run(std::env::args_os()));
}
