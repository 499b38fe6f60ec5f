//! Write Bode magnitude data for the original and both reduced models of
//! an RLC mesh as CSV.
//!
//! ```bash
//! cargo run --example bode_export > bode.csv
//! ```

use eksmor::analysis::{bode_csv, eval_original, eval_reduced, FrequencyGrid};
use eksmor::krylov::{make_operators, Method};
use eksmor::netlist::{assemble_mna, AssembleOptions};
use eksmor::superpose::reduce_all_ports;
use eksmor::synth::{SynthKind, SynthSpec};

fn main() -> eksmor::Result<()> {
    let circuit = SynthSpec::new(SynthKind::RlcMesh, 8, 2, 9).build()?;
    let model = assemble_mna(&circuit, &AssembleOptions::default())?;
    let ops = make_operators(&model)?;
    let grid = FrequencyGrid::log_spaced(1e3, 1e12, 120)?;

    let original = eval_original(&model, &grid)?;
    let mm = eval_reduced(&reduce_all_ports(&ops, Method::Mm, 4)?, &grid)?;
    let eks = eval_reduced(&reduce_all_ports(&ops, Method::Eks, 2)?, &grid)?;
    print!(
        "{}",
        bode_csv(&grid, &original, Some(&mm), Some(&eks), 1, 0)
    );
    Ok(())
}
