fn main() {
    std::process::exit(page_harness::cli::run_cli(std::env::args_os()));
}
