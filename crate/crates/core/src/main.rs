fn main() {
    let code = regcoh::cli::run_from(std::env::args_os(), &mut std::io::stderr());
    std::process::exit(code);
}
