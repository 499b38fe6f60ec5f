mod common;

use std::path::Path;
use std::process::Command;

use common::*;
use eksmor::analysis::{
    error_reduction, eval_descriptor, eval_original, eval_reduced, max_error, ErrorReport,
    FrequencyGrid,
};
use eksmor::cli::{cmd_compare, cmd_moments, cmd_reduce, InputFormat, MethodSet, RunConfig};
use eksmor::krylov::{make_operators, Method};
use eksmor::netlist::write_model_dir;
use eksmor::superpose::reduce_all_ports;
use eksmor::synth::{SynthKind, SynthSpec};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eksmor"))
}

fn write_netlist(dir: &Path, spec: &SynthSpec) -> std::path::PathBuf {
    let path = dir.join("circuit.sp");
    std::fs::write(&path, spec.build().unwrap().to_netlist()).unwrap();
    path
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn real_embedding_matches_dense_complex(seed in any::<u64>(), singular in any::<bool>()) {
        let model = if singular { singular_rlc(seed) } else { rc_ladder(seed % 64) };
        let dense = pencil(&model);
        let grid = FrequencyGrid::log_spaced(1.0, 1e12, 9).unwrap();
        let resp = eval_original(&model, &grid).unwrap();
        for (h, s) in resp.values.iter().zip(grid.samples()) {
            prop_assert!(crel_dev(h.as_ref().unwrap(), &dense.transfer(s)) <= 1e-9);
        }
    }

    #[test]
    fn conjugate_symmetry(seed in any::<u64>()) {
        let model = singular_rlc(seed);
        let omega = [3.0, 4e7, 2e10];
        let neg: Vec<f64> = omega.iter().map(|w| -w).collect();
        let eval = |w: &[f64]| {
            eval_descriptor(&model.e_matrix(), &model.a_matrix(), &model.b_dense(), &model.l_matrix(), &model.d.to_dense(), w).unwrap()
        };
        let (pos, neg) = (eval(&omega), eval(&neg));
        for (a, b) in pos.values.iter().zip(&neg.values) {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            prop_assert!(crel_dev(&a.conjugate(), b) <= 1e-12);
        }
    }

    #[test]
    fn refining_the_grid_never_lowers_max_error(seed in any::<u64>(), k in 1usize..3) {
        let model = build(&SynthSpec::new(SynthKind::RlcMesh, 5, 2, seed));
        let ops = make_operators(&model).unwrap();
        let fine = FrequencyGrid::log_spaced(1.0, 1e12, 41).unwrap();
        let coarse = FrequencyGrid::from_omega(fine.omega().iter().step_by(2).copied().collect()).unwrap();
        let pd = reduce_all_ports(&ops, Method::Eks, k).unwrap();
        let e_fine = max_error(&eval_original(&model, &fine).unwrap(), &eval_reduced(&pd, &fine).unwrap()).unwrap();
        let e_coarse = max_error(&eval_original(&model, &coarse).unwrap(), &eval_reduced(&pd, &coarse).unwrap()).unwrap();
        prop_assert!(e_fine.max_sigma >= e_coarse.max_sigma);
        prop_assert!(e_coarse.max_sigma >= 0.0);
    }

    #[test]
    fn unreduced_columns_superpose(seed in any::<u64>()) {
        let model = singular_rlc(seed);
        let grid = FrequencyGrid::log_spaced(1.0, 1e12, 12).unwrap();
        let mimo = eval_original(&model, &grid).unwrap();
        for j in 0..model.p {
            let col = eval_descriptor(
                &model.e_matrix(),
                &model.a_matrix(),
                &model.b_dense().select_columns(&[j]),
                &model.l_matrix(),
                &model.d.to_dense().select_columns(&[j]),
                grid.omega(),
            )
            .unwrap();
            for (h, c) in mimo.values.iter().zip(&col.values) {
                let (h, c) = (h.as_ref().unwrap(), c.as_ref().unwrap());
                prop_assert!((h.column(j) - c.column(0)).norm() <= 1e-12 * h.norm());
            }
        }
    }

    #[test]
    fn reduction_percentage_formula(mm in 1e-6f64..10.0, eks in 0.0f64..10.0) {
        let r = error_reduction(mm, eks).unwrap();
        prop_assert!((r - 100.0 * (mm - eks) / mm).abs() <= 1e-12 * r.abs().max(1.0));
    }
}

#[test]
fn reduction_percentage_edge_cases() {
    assert_eq!(error_reduction(0.5, 0.5), Some(0.0));
    assert_eq!(error_reduction(0.0, 0.1), None);
}

#[test]
fn compare_report_matches_in_process_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec::new(SynthKind::RcMesh, 22, 2, 31);
    let cfg = RunConfig {
        input: Some(write_netlist(dir.path(), &spec)),
        order: Some(4),
        points: 50,
        out: Some(dir.path().join("out")),
        ..Default::default()
    };
    let run = cmd_compare(&cfg).unwrap();
    let text = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    let on_disk: ErrorReport = serde_json::from_str(&text).unwrap();
    assert_eq!(on_disk, run.report);

    let model = build(&spec);
    assert_eq!(model.order(), 484);
    let ops = make_operators(&model).unwrap();
    let grid = cfg.grid().unwrap();
    let reference = eval_original(&model, &grid).unwrap();
    for (method, k) in [(Method::Mm, 2), (Method::Eks, 1)] {
        let err = max_error(
            &reference,
            &eval_reduced(&reduce_all_ports(&ops, method, k).unwrap(), &grid).unwrap(),
        )
        .unwrap();
        let m = on_disk.method(method).unwrap();
        assert_eq!(m.moments, k);
        assert_eq!(m.max_error.unwrap().to_bits(), err.max_sigma.to_bits());
    }
    let (mm, eks) = (
        on_disk.method(Method::Mm).unwrap(),
        on_disk.method(Method::Eks).unwrap(),
    );
    assert_eq!(
        on_disk.error_reduction_percent,
        error_reduction(mm.max_error.unwrap(), eks.max_error.unwrap())
    );
    let csv = std::fs::read_to_string(dir.path().join("out/bode_0_0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 51);
}

#[test]
fn moments_command_on_symmetric_rc() {
    let dir = tempfile::tempdir().unwrap();
    let model = build(&SynthSpec::new(SynthKind::RcLadder, 80, 1, 4));
    write_model_dir(dir.path(), &model).unwrap();
    let cfg = RunConfig {
        input: Some(dir.path().to_path_buf()),
        format: InputFormat::MmDir,
        k: Some(2),
        imax: Some(4),
        ..Default::default()
    };
    let table = cmd_moments(&cfg).unwrap();
    let mm = &table.methods[0];
    let eks = &table.methods[1];
    assert_eq!((mm.method, eks.method), (Method::Mm, Method::Eks));
    assert!(
        mm.relative_deviation[..4].iter().all(|&d| d <= 1e-6),
        "{:?}",
        mm.relative_deviation
    );
    assert!(
        eks.relative_deviation[..2].iter().all(|&d| d <= 1e-6),
        "{:?}",
        eks.relative_deviation
    );
    assert!(table.to_text().lines().count() == 6);
}

#[test]
fn moments_of_a_static_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("div.sp");
    std::fs::write(&net, "R1 a b 1\nR2 b 0 1\nR3 a 0 1\nI1 0 a 1\n").unwrap();
    let cfg = RunConfig {
        input: Some(net),
        k: Some(1),
        imax: Some(3),
        method: MethodSet::Mm,
        ..Default::default()
    };
    // No storage elements at all: E = 0, so only the DC row is nonzero.
    let table = cmd_moments(&cfg);
    match table {
        Ok(t) => {
            assert!(t.original[0][0][0].abs() > 0.0);
            assert!(t.original[1..]
                .iter()
                .flatten()
                .flatten()
                .all(|&v| v == 0.0));
        }
        Err(e) => assert!(e.to_string().contains("regularize"), "{e}"),
    }
}

#[test]
fn binary_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sp = d.join("pg.sp");
    let ok = |c: &mut Command| {
        let out = c.output().unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    };
    ok(bin()
        .args([
            "synth",
            "--kind",
            "power-grid",
            "--size",
            "10",
            "--ports",
            "2",
            "--seed",
            "3",
            "-o",
        ])
        .arg(&sp));
    let info = ok(bin().arg("info").arg("-i").arg(&sp));
    let info: serde_json::Value = serde_json::from_str(&info).unwrap();
    assert!(info["regularization"]["n2"].as_u64().unwrap() > 0);

    ok(bin()
        .args(["reduce", "--k", "2", "-i"])
        .arg(&sp)
        .arg("-o")
        .arg(d.join("r"))
        .env("EKSMOR_WORKERS", "2"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("r/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema"], 1);
    assert_eq!(manifest["config"]["workers"], 2);
    assert!(d.join("r/regularization/permutation.csv").exists());
    for m in ["mm", "eks"] {
        assert!(d.join("r").join(m).join("port_0001/A.mtx").exists());
    }

    let cmp = ok(bin()
        .args([
            "compare",
            "--k",
            "2",
            "--npoints",
            "30",
            "--pairs",
            "1:0",
            "-i",
        ])
        .arg(&sp)
        .arg("--roms")
        .arg(d.join("r"))
        .arg("-o")
        .arg(d.join("c")));
    assert!(cmp.contains("max error"));
    assert!(d.join("c/bode_1_0.csv").exists());

    // Replaying the manifest reproduces the ROM files byte for byte.
    ok(bin()
        .arg("reduce")
        .arg("--config")
        .arg(d.join("r/manifest.json"))
        .arg("-o")
        .arg(d.join("r2")));
    for m in ["mm", "eks"] {
        for port in ["port_0000", "port_0001"] {
            for f in ["E.mtx", "A.mtx", "B.mtx", "L.mtx", "D.mtx", "manifest.json"] {
                let a = std::fs::read(d.join("r").join(m).join(port).join(f)).unwrap();
                let b = std::fs::read(d.join("r2").join(m).join(port).join(f)).unwrap();
                assert_eq!(a, b, "{m}/{port}/{f}");
            }
        }
    }

    let moments = ok(bin()
        .args(["moments", "--k", "1", "--method", "eks", "-i"])
        .arg(&sp));
    assert!(moments.starts_with("moment"));

    let bad = bin()
        .args(["reduce", "--k", "1", "-o"])
        .arg(d.join("x"))
        .arg("-i")
        .arg(d.join("missing.sp"))
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("read"));
    let no_seed = bin()
        .args(["info", "--add-cap", "1e-12", "-i"])
        .arg(&sp)
        .output()
        .unwrap();
    assert!(!no_seed.status.success());
}

#[test]
fn warnings_reach_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        input: Some(write_netlist(
            dir.path(),
            &SynthSpec::new(SynthKind::RcMesh, 6, 2, 1),
        )),
        order: Some(6),
        method: MethodSet::Eks,
        out: Some(dir.path().join("out")),
        ..Default::default()
    };
    let run = cmd_reduce(&cfg).unwrap();
    assert!(run.manifest.warnings.iter().any(|w| w.contains("rounded")));
    let text = std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap();
    assert!(text.contains("rounded up"));
    assert!(run.manifest.methods[0].plan.rounded);
    assert_eq!(run.manifest.methods[0].plan.k, 2);
}

#[test]
fn augmentation_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("r.sp");
    std::fs::write(&net, "R1 a b 1\nR2 b c 1\nR3 c 0 1\nI1 0 a 1\n").unwrap();
    let mut cfg = RunConfig {
        input: Some(net),
        add_cap: Some(1e-12),
        seed: Some(9),
        k: Some(1),
        ..Default::default()
    };
    let a = eksmor::cli::load_model(&cfg).unwrap().0;
    let b = eksmor::cli::load_model(&cfg).unwrap().0;
    assert_eq!(a, b);
    assert!(a.capacitance_free_nodes(1e-30).is_empty());
    cfg.seed = Some(10);
    assert_ne!(eksmor::cli::load_model(&cfg).unwrap().0.c, a.c);
}
