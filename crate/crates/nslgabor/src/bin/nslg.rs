fn main() {
    std::process::exit(nslgabor::cli::run());
}
