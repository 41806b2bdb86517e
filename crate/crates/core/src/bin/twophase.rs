fn main() {
    std::process::exit(twophase_core::cli::run(std::env::args_os()));
}
