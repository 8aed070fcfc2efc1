fn main() {
    std::process::exit(softaug::cli::run(std::env::args_os()));
}
