fn main() {
    std::process::exit(symsign_cli::run(std::env::args_os()));
}
