fn main() {
    std::process::exit(damcmc_cli::main_with_args(std::env::args_os()));
}
