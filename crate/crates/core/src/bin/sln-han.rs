fn main() -> std::process::ExitCode {
    sln_han::cli::main()
}
