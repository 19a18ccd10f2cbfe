fn main() {
    std::process::exit(pdlsic::cli::run(std::env::args_os()));
}
