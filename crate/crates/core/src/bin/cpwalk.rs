fn main() -> std::process::ExitCode {
    cpwalk::cli::main()
}
