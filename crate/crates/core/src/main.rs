fn main() {
    std::process::exit(lifecurve::cli::run(std::env::args_os()));
}
