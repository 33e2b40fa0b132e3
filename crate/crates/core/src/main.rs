fn main() {
    std::process::exit(retail_sim::cli::run(std::env::args_os()));
}
