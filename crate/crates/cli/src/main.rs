fn main() {
    std::process::exit(avreach_cli::run(std::env::args_os()));
}
