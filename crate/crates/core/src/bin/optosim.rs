fn main() -> std::process::ExitCode {
    optosim::cli::main()
}
