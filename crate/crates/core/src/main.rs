fn main() {
    std::process::exit(intervalcg::cli::main(std::env::args().collect()));
}
