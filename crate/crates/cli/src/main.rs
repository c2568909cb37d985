use std::io::IsTerminal;

fn main() {
    let stdin = std::io::stdin();
    let interactive = stdin.is_terminal();
    let mut input = stdin.lock();
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    let cwd = match std::env::current_dir() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("mgit: cannot read current directory: {e}");
            std::process::exit(2);
        }
    };
    let mut env = classgit_cli::Env {
        cwd,
        config_path: None,
        stdin: &mut input,
        stdout: &mut stdout,
        stderr: &mut stderr,
        interactive,
    };
    let code = classgit_cli::run(std::env::args_os(), &mut env);
    std::process::exit(code);
}
