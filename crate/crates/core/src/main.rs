fn main() {
    std::process::exit(anisoreg::cli::run(std::env::args_os()));
}
