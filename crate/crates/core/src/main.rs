fn main() {
    std::process::exit(defect_vision::cli::run(std::env::args_os()));
}
