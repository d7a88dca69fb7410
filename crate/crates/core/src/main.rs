fn main() {
    std::process::exit(featsel::cli::run(std::env::args_os()));
}
