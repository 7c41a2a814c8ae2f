fn main() {
    std::process::exit(pressflow::cli::run(std::env::args_os()));
}
