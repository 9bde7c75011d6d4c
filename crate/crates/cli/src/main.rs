fn main() {
    std::process::exit(densityseg_cli::run(std::env::args_os()));
}
