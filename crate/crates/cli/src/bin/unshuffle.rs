use std::process::ExitCode;

fn main() -> ExitCode {
    unshuffle::run(std::env::args_os())
}
