use std::process::ExitCode;

fn main() -> ExitCode {
    ergokit::cli::main()
}
