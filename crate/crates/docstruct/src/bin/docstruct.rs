fn main() {
    std::process::exit(docstruct::cli::run());
}
