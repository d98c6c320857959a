fn main() {
    std::process::exit(gridcast::cli::dispatch(std::env::args_os()));
}
