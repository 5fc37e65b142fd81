fn main() -> std::process::ExitCode {
    pprank::cli::main()
}
