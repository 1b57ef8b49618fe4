fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("phaselock_cli=info,phaselock=warn"))
        .format_timestamp_millis()
        .init();
    let code = phaselock_cli::run(std::env::args_os(), &mut std::io::stdout());
    std::process::exit(code);
}
