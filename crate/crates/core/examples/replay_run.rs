//! Run `reduce` from a config, then replay it from the written manifest
//! and confirm the reduced models are byte-identical.

use std::path::Path;

use eksmor::cli::{cmd_reduce, RunConfig};
use eksmor::synth::{SynthKind, SynthSpec};

fn main() -> eksmor::Result<()> {
    let root = std::env::temp_dir().join(format!("eksmor_replay_{}", std::process::id()));
    std::fs::create_dir_all(&root).unwrap();
    let netlist = root.join("grid.sp");
    std::fs::write(
        &netlist,
        SynthSpec::new(SynthKind::PowerGrid, 12, 3, 4)
            .build()?
            .to_netlist(),
    )
    .unwrap();

    let first = RunConfig {
        input: Some(netlist),
        order: Some(6),
        out: Some(root.join("first")),
        ..Default::default()
    };
    let run = cmd_reduce(&first)?;
    for m in &run.manifest.methods {
        println!("{} k={} rom order {}", m.plan.method, m.plan.k, m.rom_order);
    }

    let mut replay = RunConfig::from_file(&root.join("first/manifest.json"))?;
    replay.out = Some(root.join("second"));
    cmd_reduce(&replay)?;

    for method in ["mm", "eks"] {
        let a = read_all(&root.join("first").join(method));
        let b = read_all(&root.join("second").join(method));
        assert_eq!(a, b);
        println!("{method}: {} files identical", a.len());
    }
    Ok(())
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}
