fn main() -> std::process::ExitCode {
    spps::cli::main_with_args(std::env::args_os())
}
