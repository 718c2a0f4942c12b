fn main() {
    std::process::exit(stgarch::cli::main());
}
