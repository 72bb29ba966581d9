fn main() {
    std::process::exit(ged_extremes::harness::cli::run(std::env::args_os()));
}
