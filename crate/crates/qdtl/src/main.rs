fn main() {
    std::process::exit(qdtl::cli::run());
}
