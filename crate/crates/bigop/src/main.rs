fn main() {
    std::process::exit(bigop::cli::cli_main(std::env::args_os()));
}
