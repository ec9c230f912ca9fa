use std::process::ExitCode;

fn main() -> ExitCode {
    topos_forge::cli::configure_threads();
    let code = topos_forge::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code as u8)
}
