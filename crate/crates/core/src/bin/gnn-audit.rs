fn main() {
    std::process::exit(gnn_audit::cli::main_with_args(std::env::args_os()));
}
