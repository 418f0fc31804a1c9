fn main() {
    std::process::exit(twophase_gelfand::cli::run(std::env::args_os()));
}
