//! Per-port reduction in parallel, then reassemble the MIMO response and
//! check that a capped worker pool gives identical reduced models.

use eksmor::analysis::FrequencyGrid;
use eksmor::krylov::{make_operators, Method};
use eksmor::netlist::{assemble_mna, AssembleOptions};
use eksmor::superpose::{assemble_h, reduce_all_ports, reduce_all_ports_with, ReduceOptions};
use eksmor::synth::{SynthKind, SynthSpec};

fn main() -> eksmor::Result<()> {
    let circuit = SynthSpec::new(SynthKind::RcMesh, 20, 6, 5).build()?;
    let model = assemble_mna(&circuit, &AssembleOptions::default())?;
    let ops = make_operators(&model)?;

    let pd = reduce_all_ports(&ops, Method::Eks, 2)?;
    for pr in &pd.ports {
        println!(
            "port {}: order {}, {:.2e}s",
            pr.port,
            pr.rom.order(),
            pr.seconds
        );
    }
    println!(
        "total {:.2e}s, mean {:.2e}s per port",
        pd.total_seconds(),
        pd.mean_seconds()
    );

    let serial = reduce_all_ports_with(
        &ops,
        Method::Eks,
        2,
        &ReduceOptions {
            workers: Some(1),
            ..Default::default()
        },
    )?;
    assert!(pd
        .ports
        .iter()
        .zip(&serial.ports)
        .all(|(a, b)| a.rom == b.rom));
    println!("one worker reproduces the parallel reduction exactly");

    let grid = FrequencyGrid::log_spaced(1e6, 1e11, 4)?;
    let h = assemble_h(&pd, &grid.samples())?;
    for (w, m) in grid.omega().iter().zip(&h.values) {
        let m = m.as_ref().unwrap();
        println!(
            "omega {w:.1e}: H is {}x{}, |H00| = {:.4e}",
            m.nrows(),
            m.ncols(),
            m[(0, 0)].norm()
        );
    }
    Ok(())
}
