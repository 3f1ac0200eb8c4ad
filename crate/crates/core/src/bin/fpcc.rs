fn main() {
    std::process::exit(fpcc::cli::run(std::env::args_os()));
}
