fn main() -> std::process::ExitCode {
    actor_mbt::cli::main()
}
