fn main() {
    std::process::exit(robust_kmedians::cli::run_cli(std::env::args_os()));
}
