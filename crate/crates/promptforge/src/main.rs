fn main() {
    std::process::exit(promptforge::cli::run_from_env());
}
