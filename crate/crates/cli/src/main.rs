use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "grflab", version, about = "Generalized Ricci flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task described by a TOML config.
    Run { config: PathBuf },
    /// List backend and complex-structure presets.
    ListPresets,
    /// Print the annotated config reference.
    Schema,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListPresets => {
            print!("{}", grflab_cli::list_presets());
            ExitCode::SUCCESS
        }
        Command::Schema => {
            print!("{}", grflab_cli::SCHEMA);
            ExitCode::SUCCESS
        }
        Command::Run { config } => match grflab_cli::run_file(&config) {
            Ok(out) => {
                for a in &out.assertions {
                    println!("{a}");
                }
                for f in &out.files {
                    println!("wrote {}", f.display());
                }
                let failed = out.assertions.iter().filter(|a| !a.pass).count();
                if failed == 0 {
                    println!("ok: {} assertions passed", out.assertions.len());
                    ExitCode::SUCCESS
                } else {
                    println!("FAILED: {failed} of {} assertions", out.assertions.len());
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
