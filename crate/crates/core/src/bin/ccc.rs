fn main() {
    std::process::exit(ccc_transport::cli::main(std::env::args_os()));
}
