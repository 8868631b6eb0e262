use std::path::PathBuf;
use std::process::ExitCode;

fn main() -> ExitCode {
    let root = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(pkgstack_fixtures::fixtures_dir);
    if root.exists() {
        if let Err(e) = std::fs::remove_dir_all(&root) {
            eprintln!("cannot clear {}: {e}", root.display());
            return ExitCode::FAILURE;
        }
    }
    match pkgstack_fixtures::write_all(&root) {
        Ok(()) => {
            println!("wrote fixtures to {}", root.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cannot write fixtures: {e}");
            ExitCode::FAILURE
        }
    }
}
