fn main() {
    std::process::exit(mfspec_cli::run(std::env::args_os()));
}
