fn main() -> std::process::ExitCode {
    chirplet_cli::main_with_args(std::env::args_os())
}
