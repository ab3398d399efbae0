pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{validate, Diagnostic, RunConfig};
pub use error::CliError;

use output::OutputSet;

/// Validates, executes and writes the manifest. Nothing is left behind on failure.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let problems = validate(cfg);
    if !problems.is_empty() {
        return Err(CliError::Invalid(problems));
    }
    let mut out = OutputSet::create(&cfg.out_dir)?;
    match run::execute(cfg, &mut out) {
        Ok(inputs) => out.finish(cfg, &inputs),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}
