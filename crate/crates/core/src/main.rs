use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hypoteq::persist::load_db_file;
use hypoteq::session::{run_script_file, Session, StatementReader, PROMPT};

/// SQL with hypothetical queries over a deductive database.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Serve the JSON API on this port instead of reading statements.
    #[arg(long)]
    port: Option<u16>,
    /// Database file to load at startup.
    #[arg(long)]
    load: Option<PathBuf>,
    /// Run the statements in this file and exit.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Continue a script after a failing statement.
    #[arg(long)]
    keep_going: bool,
    /// Display the Datalog compilation of SQL queries.
    #[arg(long)]
    show_compilations: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut session = match &args.load {
        Some(path) => match load_db_file(path) {
            Ok(db) => Session::with_database(db),
            Err(e) => {
                eprintln!("Error: {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        },
        None => Session::new(),
    };
    session.set_show_compilations(args.show_compilations);

    if let Some(path) = &args.script {
        let stdout = io::stdout();
        return match run_script_file(&mut session, path, args.keep_going, &mut stdout.lock()) {
            Ok(0) => ExitCode::SUCCESS,
            Ok(_) => ExitCode::FAILURE,
            Err(e) => {
                eprintln!("Error: {}: {e}", path.display());
                ExitCode::FAILURE
            }
        };
    }

    if let Some(port) = args.port {
        let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
        eprintln!("Info: listening on port {port}.");
        return match rt.block_on(hypoteq::http::serve(session, port)) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("Error: {e}");
                ExitCode::FAILURE
            }
        };
    }

    repl(&mut session);
    ExitCode::SUCCESS
}

fn repl(session: &mut Session) {
    let stdin = io::stdin();
    let mut reader = StatementReader::new();
    let mut lines = stdin.lock().lines();
    loop {
        print!("{}", if reader.pending() { "   ...> " } else { PROMPT });
        io::stdout().flush().ok();
        let Some(Ok(line)) = lines.next() else {
            if let Some(stmt) = reader.finish() {
                show(session, &stmt);
            }
            println!();
            return;
        };
        if !reader.pending() && matches!(line.trim(), "/quit" | "/exit") {
            return;
        }
        if let Some(stmt) = reader.push(&line) {
            show(session, &stmt);
        }
    }
}

fn show(session: &mut Session, stmt: &str) {
    match session.eval(stmt) {
        Ok(s) if s.is_empty() => {}
        Ok(s) => println!("{s}"),
        Err(e) => println!("Error: {e}"),
    }
}
