fn main() {
    mrrefine_cli::init_logging();
    let code = mrrefine_cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
