fn main() {
    std::process::exit(epidemio::cli::run(std::env::args_os()));
}
