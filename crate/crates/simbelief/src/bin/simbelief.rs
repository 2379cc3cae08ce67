fn main() {
    std::process::exit(simbelief::cli::run(std::env::args_os()));
}
