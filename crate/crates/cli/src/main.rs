use clap::Parser;
use regcap_cli::{error_record, exit_code, run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return;
        }
        Err(e) => {
            let _ = e.print();
            let record = serde_json::json!({ "error": "usage", "message": e.kind().to_string(), "exit_code": 3 });
            eprintln!("{record}");
            std::process::exit(3);
        }
    };
    if let Err(e) = run(&cli) {
        eprintln!("{}", error_record(&e));
        std::process::exit(exit_code(&e));
    }
}
