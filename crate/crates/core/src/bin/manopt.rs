fn main() {
    std::process::exit(manifold_newton::cli::run(std::env::args_os()));
}
