fn main() -> std::process::ExitCode {
    swarg::main_entry()
}
