fn main() {
    std::process::exit(hss_eig::cli::run(std::env::args_os()));
}
