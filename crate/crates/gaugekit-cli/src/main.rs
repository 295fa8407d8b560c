fn main() {
    // Subcommand dispatch lands after the library modules are in place.
    std::process::exit(0);
}
