//! Interactive session: the script grammar, one command per prompt.

use std::io::{self, BufRead, Write};

use crate::command::parse_line;
use crate::runner::{render_outcome, Outcome, Runner};

/// Reads commands from stdin until EOF. The prompt goes to stderr so a piped
/// session produces clean, diffable stdout.
pub fn repl(runner: &mut Runner) -> io::Result<()> {
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let mut out = io::stdout();
    let mut line_no = 0;
    loop {
        eprint!("rbac> ");
        let Some(line) = lines.next() else {
            eprintln!();
            return Ok(());
        };
        let line = line?;
        line_no += 1;
        match parse_line(line_no, &line) {
            Ok(None) => {}
            Ok(Some(parsed)) => {
                for outcome in runner.execute(&parsed.raw, &parsed.command) {
                    out.write_all(render_outcome(&outcome).as_bytes())?;
                }
            }
            Err(e) => {
                out.write_all(render_outcome(&Outcome::from_error(e)).as_bytes())?;
            }
        }
        out.flush()?;
    }
}
