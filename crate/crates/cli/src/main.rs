use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = stein_dual_cli::run(std::env::args_os());
    print!("{}", outcome.stdout);
    if !outcome.stderr.is_empty() {
        eprint!("{}", outcome.stderr);
    }
    let _ = std::io::stdout().flush();
    ExitCode::from(outcome.code)
}
