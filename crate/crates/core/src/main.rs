fn main() {
    std::process::exit(complement_sampling::cli::main_from_env());
}
