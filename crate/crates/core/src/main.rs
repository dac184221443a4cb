fn main() {
    std::process::exit(tailpoint::cli::run(std::env::args_os()));
}
