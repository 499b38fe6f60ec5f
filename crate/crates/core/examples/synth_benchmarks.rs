//! Generate one circuit of every synthetic family and summarize it.

use eksmor::netlist::{assemble_mna, AssembleOptions};
use eksmor::synth::{SynthKind, SynthSpec};

fn main() -> eksmor::Result<()> {
    for (kind, size) in [
        (SynthKind::RcLadder, 200),
        (SynthKind::RcMesh, 30),
        (SynthKind::RlcMesh, 20),
        (SynthKind::PowerGrid, 24),
    ] {
        let circuit = SynthSpec::new(kind, size, 4, 42).build()?;
        let model = assemble_mna(&circuit, &AssembleOptions::default())?;
        println!(
            "{kind:?}: {} elements, n = {}, m = {}, p = {}, cap-free nodes {}",
            circuit.elements().len(),
            model.n,
            model.m,
            model.p,
            model.capacitance_free_nodes(1e-30).len()
        );
    }

    let a = SynthSpec::new(SynthKind::PowerGrid, 10, 2, 7)
        .build()?
        .to_netlist();
    let b = SynthSpec::new(SynthKind::PowerGrid, 10, 2, 7)
        .build()?
        .to_netlist();
    assert_eq!(a, b);
    println!("same seed, same netlist ({} bytes)", a.len());
    Ok(())
}
