fn main() {
    std::process::exit(sedqa::cli::run());
}
