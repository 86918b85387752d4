fn main() {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code =
        dtc_core::cli::parse_and_dispatch(std::env::args(), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
