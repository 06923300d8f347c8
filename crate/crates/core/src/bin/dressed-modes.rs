fn main() -> std::process::ExitCode {
    dressed_modes::cli::main()
}
