fn main() {
    std::process::exit(quermass::cli::run());
}
