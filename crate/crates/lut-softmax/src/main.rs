fn main() {
    std::process::exit(lut_softmax::cli::run(std::env::args_os()));
}
