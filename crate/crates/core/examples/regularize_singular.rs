//! Eliminate capacitance-free nodes from an RLC mesh and check that the
//! regularized realization has the same transfer function.

use eksmor::analysis::{eval_original, eval_rom, FrequencyGrid};
use eksmor::krylov::{make_operators, Realization, ReducedModel};
use eksmor::netlist::{assemble_mna, AssembleOptions};
use eksmor::regularize::{detect_and_partition, Partition, DEFAULT_DENSE_CAP};
use eksmor::synth::{SynthKind, SynthSpec};

fn main() -> eksmor::Result<()> {
    let circuit = SynthSpec::new(SynthKind::RlcMesh, 6, 2, 11).build()?;
    let model = assemble_mna(&circuit, &AssembleOptions::default())?;

    let Partition::Singular(pm) = detect_and_partition(&model)? else {
        unreachable!("RLC meshes have cap-free midpoints")
    };
    println!("n1 = {}, n2 = {}, m = {}", pm.n1, pm.n2, pm.m);
    println!("eliminated nodes: {:?}", pm.removed_node_names());

    let ops = make_operators(&model)?;
    if let Realization::Regularized { n1, n2, .. } = ops.realization() {
        println!(
            "regularized order {} (was {}); n1 = {n1}, n2 = {n2}",
            ops.dim(),
            model.order()
        );
    }
    println!("E_reg invertible: {}", ops.has_e_inverse());

    // The full realization, unprojected, against the original pencil.
    let full = ReducedModel::densify(&ops, DEFAULT_DENSE_CAP)?;
    let grid = FrequencyGrid::log_spaced(1.0, 1e12, 25)?;
    let orig = eval_original(&model, &grid)?;
    let reg = eval_rom(&full, &grid);
    let mut worst = 0.0f64;
    for (a, b) in orig.values.iter().zip(&reg.values) {
        let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
        worst = worst.max((a - b).norm() / a.norm());
    }
    println!("max relative deviation over the grid: {worst:.2e}");
    Ok(())
}
