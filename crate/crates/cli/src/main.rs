fn main() {
    std::process::exit(critwin_cli::run(std::env::args_os()));
}
