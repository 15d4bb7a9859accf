//! Thin binary wrapper: all behavior lives in [`gapmoments::cli::run`].

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(gapmoments::cli::run(&argv));
}
