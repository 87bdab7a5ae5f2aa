fn main() {
    std::process::exit(biblioscope::run(std::env::args_os()));
}
