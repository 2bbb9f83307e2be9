fn main() {
    if let Err(err) = credit_backbone::cli::run(std::env::args_os()) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
