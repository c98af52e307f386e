fn main() {
    std::process::exit(dmt::cli::run(std::env::args_os()));
}
