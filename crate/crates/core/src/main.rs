fn main() {
    std::process::exit(timecf::cli::run_command(std::env::args_os()));
}
