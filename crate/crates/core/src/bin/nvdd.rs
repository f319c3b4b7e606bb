fn main() {
    std::process::exit(nvdd::cli::main());
}
