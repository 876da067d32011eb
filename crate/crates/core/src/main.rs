fn main() {
    std::process::exit(ncricci::cli::main_with(std::env::args_os()));
}
