use clap::error::ErrorKind;
use clap::Parser;
use csfmm_cli::args::Cli;
use csfmm_cli::commands::{emit, run};
use csfmm_cli::CliError;

fn fail(e: CliError) -> ! {
    eprintln!("{}", e.to_json());
    std::process::exit(e.exit_code());
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => e.exit(),
        Err(e) => fail(CliError::Flags(e.to_string().trim_end().to_string())),
    };
    match run(&cli.command).and_then(|(report, path)| emit(&report, path)) {
        Ok(()) => {}
        Err(e) => fail(e),
    }
}
