fn main() {
    std::process::exit(frobtrace::cli::main_entry(std::env::args_os()));
}
