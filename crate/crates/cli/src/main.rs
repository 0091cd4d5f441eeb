fn main() {
    std::process::exit(ndde_cli::run(std::env::args_os()));
}
