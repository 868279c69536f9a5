fn main() {
    std::process::exit(mixtomo::cli::main_entry());
}
