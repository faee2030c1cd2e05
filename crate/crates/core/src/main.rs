fn main() {
    std::process::exit(mglab::cli::run(std::env::args_os()));
}
