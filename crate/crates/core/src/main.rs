fn main() {
    std::process::exit(ckn_lab::cli::run(std::env::args_os()));
}
