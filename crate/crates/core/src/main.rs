fn main() {
    std::process::exit(horocost::cli::main_with_args(std::env::args().collect()));
}
