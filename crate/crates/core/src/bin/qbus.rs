fn main() {
    std::process::exit(qbus::cli::run(std::env::args_os()));
}
