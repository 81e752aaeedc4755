fn main() {
    std::process::exit(spatial_relation::cli::run(std::env::args_os()));
}
