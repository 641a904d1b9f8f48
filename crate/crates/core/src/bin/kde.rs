fn main() {
    std::process::exit(manifold_kde::cli::run(std::env::args_os()));
}
