fn main() {
    std::process::exit(bergman_extremal::cli::main_entry(std::env::args_os()));
}
