fn main() {
    std::process::exit(gridplan_cli::run(std::env::args_os()));
}
