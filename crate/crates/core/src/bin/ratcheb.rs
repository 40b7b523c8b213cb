fn main() {
    std::process::exit(ratcheb::cli::run(std::env::args_os()));
}
