fn main() {
    std::process::exit(bridgebench::cli::run(std::env::args_os()));
}
