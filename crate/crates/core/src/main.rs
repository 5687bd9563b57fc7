fn main() {
    std::process::exit(procstruct::cli::run(std::env::args_os()));
}
