fn main() {
    std::process::exit(momentum_lab::cli::main());
}
