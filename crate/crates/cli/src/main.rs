fn main() {
    std::process::exit(hexmix_cli::run(std::env::args_os()));
}
