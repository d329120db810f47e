fn main() {
    std::process::exit(size_winding::cli::run(std::env::args_os()));
}
