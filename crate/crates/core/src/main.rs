fn main() {
    std::process::exit(pdrls::cli::run(std::env::args_os()));
}
