fn main() {
    std::process::exit(relaydelay::cli::run(std::env::args_os()));
}
