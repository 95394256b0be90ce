fn main() {
    std::process::exit(affectnet::cli::run());
}
