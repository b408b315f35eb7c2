fn main() {
    std::process::exit(herdsim::cli::main_entry());
}
