fn main() {
    std::process::exit(qudit_char::cli::run(std::env::args_os()));
}
