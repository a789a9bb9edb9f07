fn main() {
    std::process::exit(postconc_cli::run(std::env::args_os()));
}
