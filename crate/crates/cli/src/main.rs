fn main() {
    std::process::exit(qkd_cli::app::run(std::env::args_os()));
}
