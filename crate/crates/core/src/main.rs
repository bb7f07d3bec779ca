fn main() {
    std::process::exit(qcoinflip::cli::run(std::env::args_os()));
}
