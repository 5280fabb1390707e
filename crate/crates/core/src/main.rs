fn main() {
    std::process::exit(qgbounds::cli::run(std::env::args_os()));
}
