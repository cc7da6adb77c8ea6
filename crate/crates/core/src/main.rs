fn main() {
    std::process::exit(active_ht::cli::run(std::env::args_os()));
}
