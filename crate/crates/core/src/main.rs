fn main() {
    std::process::exit(pencilcrt::cli::run(std::env::args_os()));
}
