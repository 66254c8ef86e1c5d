fn main() {
    std::process::exit(tensketch_cli::run(std::env::args_os()));
}
