fn main() -> std::process::ExitCode {
    nonstat::cli::main()
}
