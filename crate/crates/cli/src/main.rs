fn main() {
    std::process::exit(betatree_cli::run(std::env::args_os()));
}
