fn main() {
    std::process::exit(equator_forge::cli::main());
}
