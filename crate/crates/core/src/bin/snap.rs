fn main() {
    std::process::exit(snap_lab::harness::cli::run_cli(std::env::args_os()));
}
