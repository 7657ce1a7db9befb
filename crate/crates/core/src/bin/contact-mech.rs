fn main() {
    std::process::exit(contact_mech::cli::main_with(std::env::args_os()));
}
