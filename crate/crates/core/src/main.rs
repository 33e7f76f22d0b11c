fn main() {
    std::process::exit(cfx_core::cli::main());
}
