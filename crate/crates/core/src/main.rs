fn main() {
    std::process::exit(rsgkit::cli::run(std::env::args_os()));
}
