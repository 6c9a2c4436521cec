fn main() -> std::process::ExitCode { timebin::cli::run() }
