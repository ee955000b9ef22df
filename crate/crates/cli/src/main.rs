fn main() {
    std::process::exit(duality_cli::run(std::env::args_os()));
}
