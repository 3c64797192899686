fn main() {
    std::process::exit(mc_cli::run(std::env::args().skip(1)));
}
