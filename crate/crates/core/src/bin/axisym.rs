fn main() {
    std::process::exit(axisym::cli::main_with(std::env::args_os()));
}
