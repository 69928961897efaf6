fn main() {
    std::process::exit(bigjumps::cli::run(std::env::args_os()));
}
