fn main() {
    env_logger::init();
    std::process::exit(qcd::cli::run());
}
