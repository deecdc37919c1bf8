fn main() {
    std::process::exit(rssiloc_cli::run(std::env::args_os()));
}
