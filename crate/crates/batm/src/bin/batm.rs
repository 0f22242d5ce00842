fn main() {
    std::process::exit(batm::cli::run(std::env::args()));
}
