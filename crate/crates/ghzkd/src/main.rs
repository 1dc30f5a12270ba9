use std::process::ExitCode;

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes (e.g. `ghzkd ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    ghzkd::cli::main_entry()
}
