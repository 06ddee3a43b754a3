fn main() {
    std::process::exit(trustaug::cli::run(std::env::args_os()));
}
