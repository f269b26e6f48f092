fn main() {
    if let Err(err) = fairfix::cli::run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
