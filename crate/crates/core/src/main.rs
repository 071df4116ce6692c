fn main() {
    std::process::exit(rpia_core::cli::run(std::env::args_os()));
}
