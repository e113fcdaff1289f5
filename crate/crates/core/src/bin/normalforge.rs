fn main() {
    std::process::exit(normalforge::cli::run(std::env::args_os()));
}
