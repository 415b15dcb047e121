fn main() {
    std::process::exit(eviboost::cli::run(std::env::args_os()));
}
