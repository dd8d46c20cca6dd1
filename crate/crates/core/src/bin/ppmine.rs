fn main() {
    // warnings only; the CLI reads no environment configuration
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).init();
    std::process::exit(ppmine::cli::main_with_args(std::env::args_os()));
}
