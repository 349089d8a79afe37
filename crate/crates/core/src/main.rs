fn main() {
    std::process::exit(equivprobe::cli::run(std::env::args_os()));
}
