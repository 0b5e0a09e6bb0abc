fn main() {
    std::process::exit(panelinfer_harness::cli::run(std::env::args_os()));
}
