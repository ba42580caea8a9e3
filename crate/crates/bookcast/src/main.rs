use std::process::ExitCode;

fn main() -> ExitCode {
    // behave like a normal unix tool when stdout is closed early (e.g.
    // piped into `head`): die on SIGPIPE instead of panicking
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    bookcast::cli::run(std::env::args_os())
}
