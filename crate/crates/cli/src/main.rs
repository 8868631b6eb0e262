use std::process::ExitCode;

use pkgstack_cli::{run, Context};

fn main() -> ExitCode {
    let ctx = Context::from_env();
    let code = run(
        std::env::args_os(),
        &ctx,
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    ExitCode::from(code as u8)
}
