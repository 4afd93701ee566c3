fn main() {
    std::process::exit(boxpack::cli::run());
}
