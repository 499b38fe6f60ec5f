//! Reduce a two-layer power grid with both methods at equal ROM order and
//! compare their worst-case frequency-domain error.
//!
//! ```bash
//! cargo run --release --example compare_methods -- 30 4
//! ```

use eksmor::analysis::{error_reduction, eval_original, eval_reduced, max_error, FrequencyGrid};
use eksmor::krylov::{make_operators, Method};
use eksmor::netlist::{assemble_mna, AssembleOptions};
use eksmor::superpose::reduce_all_ports;
use eksmor::synth::{SynthKind, SynthSpec};

fn main() -> eksmor::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<usize>().expect("integer argument"));
    let side = args.next().unwrap_or(24);
    let ports = args.next().unwrap_or(2);

    let circuit = SynthSpec::new(SynthKind::PowerGrid, side, ports, 1).build()?;
    let model = assemble_mna(&circuit, &AssembleOptions::default())?;
    let ops = make_operators(&model)?;
    println!("order {} with {} ports", model.order(), model.p);

    let grid = FrequencyGrid::log_spaced(1.0, 1e12, 200)?;
    let reference = eval_original(&model, &grid)?;

    for k_eks in 1..=2 {
        let k_mm = 2 * k_eks;
        let mut errors = Vec::new();
        for (method, k) in [(Method::Mm, k_mm), (Method::Eks, k_eks)] {
            let pd = reduce_all_ports(&ops, method, k)?;
            let curve = max_error(&reference, &eval_reduced(&pd, &grid)?)?;
            println!(
                "{method:>3} k={k}: per-port order {}, max error {:.4e} at {:.3e} rad/s",
                pd.rom_order(),
                curve.max_sigma,
                grid.omega()[curve.argmax]
            );
            errors.push(curve.max_sigma);
        }
        match error_reduction(errors[0], errors[1]) {
            Some(r) => println!("error reduction {r:.1}%"),
            None => println!("error reduction undefined"),
        }
    }
    Ok(())
}
