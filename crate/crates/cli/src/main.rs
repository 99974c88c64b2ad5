fn main() {
    std::process::exit(tracesolve_cli::run(std::env::args_os().collect()));
}
