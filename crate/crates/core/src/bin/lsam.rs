fn main() {
    std::process::exit(lsam::harness::cli::main());
}
