fn main() {
    std::process::exit(surgeme_kit::cli::run(std::env::args_os()));
}
