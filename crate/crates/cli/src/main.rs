fn main() {
    std::process::exit(moran_cli::run(std::env::args_os()));
}
