use std::process::ExitCode;

fn main() -> ExitCode {
    // Report panics as one line instead of a backtrace.
    std::panic::set_hook(Box::new(|info| {
        let msg = info
            .payload()
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| info.payload().downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown failure".into());
        eprintln!("rgspec: internal error: {msg}");
    }));
    let code = std::panic::catch_unwind(|| {
        let mut out = std::io::stdout().lock();
        let mut err = std::io::stderr().lock();
        rgspec::cli::main_with_args(std::env::args_os(), &mut out, &mut err)
    })
    .unwrap_or(rgspec::cli::EXIT_USAGE);
    ExitCode::from(code as u8)
}
