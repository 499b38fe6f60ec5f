//! Build standard and extended Krylov bases for one port and inspect
//! their block ledger, orthonormality and moment containment.

use eksmor::krylov::{containment_residual, extended_basis, make_operators, standard_basis};
use eksmor::netlist::{assemble_mna, AssembleOptions};
use eksmor::synth::{SynthKind, SynthSpec};

fn main() -> eksmor::Result<()> {
    let circuit = SynthSpec::new(SynthKind::RcMesh, 10, 1, 3).build()?;
    let model = assemble_mna(&circuit, &AssembleOptions::default())?;
    let ops = make_operators(&model)?;
    let b_e = ops.solve_a(ops.b())?;
    let k = 3;

    let mm = standard_basis(&ops, &b_e, k)?;
    let eks = extended_basis(&ops, &b_e, k)?;
    for basis in [&mm, &eks] {
        println!(
            "{}: {} columns, k_effective {}, |X^T X - I| = {:.1e}",
            basis.method,
            basis.ncols(),
            basis.k_effective,
            basis.orthonormality_defect()
        );
        for entry in &basis.ledger {
            println!(
                "  iteration {} {:?} columns {:?}",
                entry.iteration, entry.direction, entry.columns
            );
        }
    }

    // Forward vectors (A^-1 E)^i B_E and backward vectors (E^-1 A)^j B_E
    // must both lie in the extended space.
    let mut fwd = b_e.clone();
    let mut bwd = ops.apply_ae_inv(&b_e)?;
    for i in 0..k {
        println!(
            "i = {i}: forward in EKS {:.1e}, in MM {:.1e}; backward in EKS {:.1e}, in MM {:.1e}",
            containment_residual(&eks.x, &fwd)?,
            containment_residual(&mm.x, &fwd)?,
            containment_residual(&eks.x, &bwd)?,
            containment_residual(&mm.x, &bwd)?,
        );
        fwd = ops.apply_ae(&fwd)?;
        bwd = ops.apply_ae_inv(&bwd)?;
    }
    Ok(())
}
