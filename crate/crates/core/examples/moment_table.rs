//! Moments of the original model next to the moments of each reduced
//! model, through the same pipeline the `moments` command uses.

use eksmor::cli::{cmd_moments, RunConfig};
use eksmor::netlist::{assemble_mna, write_model_dir, AssembleOptions};
use eksmor::synth::{SynthKind, SynthSpec};

fn main() -> eksmor::Result<()> {
    let dir = tempfile_dir();
    let circuit = SynthSpec::new(SynthKind::RlcMesh, 5, 1, 2).build()?;
    write_model_dir(&dir, &assemble_mna(&circuit, &AssembleOptions::default())?)?;

    let cfg = RunConfig {
        input: Some(dir),
        format: eksmor::cli::InputFormat::MmDir,
        k: Some(2),
        imax: Some(5),
        ..Default::default()
    };
    let table = cmd_moments(&cfg)?;
    print!("{}", table.to_text());
    Ok(())
}

fn tempfile_dir() -> std::path::PathBuf {
    std::env::temp_dir().join(format!("eksmor_moments_{}", std::process::id()))
}
