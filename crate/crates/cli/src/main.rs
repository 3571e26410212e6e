fn main() {
    std::process::exit(oligodyn_cli::run(std::env::args_os()));
}
