use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let out = katolab_cli::execute(std::env::args_os());
    // a closed pipe (e.g. `| head`) is not worth reporting
    let _ = writeln!(std::io::stdout().lock(), "{}", out.stdout.trim_end());
    if !out.stderr.is_empty() {
        let _ = writeln!(std::io::stderr().lock(), "{}", out.stderr.trim_end());
    }
    ExitCode::from(out.code)
}
