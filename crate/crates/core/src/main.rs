fn main() {
    let code = polar_awgn::cli::cli_main(std::env::args_os());
    std::process::exit(code);
}
