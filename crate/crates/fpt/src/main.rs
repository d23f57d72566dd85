fn main() {
    std::process::exit(fpt::run(std::env::args_os()));
}
