fn main() {
    std::process::exit(qcomp_cli::app::run_cli(std::env::args_os()));
}
