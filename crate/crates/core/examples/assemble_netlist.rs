//! Parse a small RLC netlist, stamp it into descriptor form and save the
//! matrices as a Matrix Market directory.
//!
//! ```bash
//! cargo run --example assemble_netlist -- /tmp/rlc_model
//! ```

use eksmor::netlist::{
    assemble_mna, parse_netlist, read_model_dir, write_model_dir, AssembleOptions,
};

const NETLIST: &str = "\
* two-section RLC line driven by a current source
R1 in a 2.0
L1 a b 1n
C1 b 0 1p
R2 b c 1.5
C2 c 0 0.5p
Rt c 0 50
I1 0 in 1
.end
";

fn main() -> eksmor::Result<()> {
    let circuit = parse_netlist(NETLIST)?;
    let model = assemble_mna(&circuit, &AssembleOptions::default())?;
    println!(
        "nodes n = {}, inductors m = {}, order N = {}",
        model.n,
        model.m,
        model.order()
    );
    println!("ports {:?}", model.port_names);
    println!(
        "capacitance-free nodes: {:?}",
        model
            .capacitance_free_nodes(1e-30)
            .iter()
            .map(|&i| model.node_label(i))
            .collect::<Vec<_>>()
    );

    println!("G =\n{}", model.g.to_dense().to_csv());
    println!("E = diag(C, M), A = -[[G, W], [-W^T, 0]]");
    println!("A =\n{}", model.a_matrix().to_dense().to_csv());

    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("rlc_model").display().to_string());
    write_model_dir(dir.as_ref(), &model)?;
    let back = read_model_dir(dir.as_ref())?;
    assert_eq!(back.e_matrix().to_dense(), model.e_matrix().to_dense());
    println!("wrote {dir}");
    Ok(())
}
