fn main() {
    std::process::exit(lvsmile::cli::run(std::env::args_os()));
}
