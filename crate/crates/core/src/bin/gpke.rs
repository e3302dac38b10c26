fn main() {
    std::process::exit(gpke::cli::run(std::env::args_os()));
}
