fn main() {
    std::process::exit(multireduce::cli::run(std::env::args_os()));
}
