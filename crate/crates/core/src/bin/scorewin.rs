fn main() {
    std::process::exit(scorewin::cli::run(std::env::args_os()));
}
