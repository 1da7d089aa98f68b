fn main() {
    std::process::exit(offpolicy_betting::cli::run(std::env::args_os()));
}
