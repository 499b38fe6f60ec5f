mod common;

use common::*;
use eksmor::analysis::{eval_original, eval_reduced, max_error, FrequencyGrid};
use eksmor::dense::Complex;
use eksmor::krylov::{
    build_basis, containment_residual, extended_basis, make_operators, moments, project,
    standard_basis, BasisOptions, Method, OperatorPair,
};
use eksmor::netlist::DescriptorModel;
use eksmor::superpose::{reduce_all_ports, reduce_all_ports_with, ReduceOptions};
use eksmor::synth::{SynthKind, SynthSpec};
use eksmor::{DenseBlock, SparseMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random dense-ish RC model of order `n`: symmetric positive definite
/// `G` and diagonal `C`, `L = Bᵀ`.
fn random_rc(seed: u64, n: usize, p: usize) -> OperatorPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    let mut diag = vec![0.1; n];
    for i in 0..n {
        for _ in 0..2 {
            let j = rng.random_range(0..n);
            if i != j {
                let g = rng.random_range(0.5..2.0);
                t.push((i, j, -g));
                t.push((j, i, -g));
                diag[i] += g;
                diag[j] += g;
            }
        }
    }
    t.extend(diag.iter().enumerate().map(|(i, &d)| (i, i, d)));
    let g = SparseMatrix::from_triplets(n, n, &t).unwrap();
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let b = DenseBlock::from_col_major(
        n,
        p,
        (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    OperatorPair::from_matrices(
        SparseMatrix::diagonal(&c),
        g.scaled(-1.0),
        b.clone(),
        b,
        DenseBlock::zeros(p, p),
    )
    .unwrap()
}

fn dense_of(ops: &OperatorPair) -> DensePencil {
    DensePencil {
        e: dm(ops.e()),
        a: ops.dense_a(10_000).unwrap().to_nalgebra(),
        b: ops.b().to_nalgebra(),
        l: ops.lt().to_nalgebra().transpose(),
        d: ops.d().to_nalgebra(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bases_are_orthonormal_and_bounded(seed in any::<u64>(), p in 1usize..4, k in 1usize..5, eks in any::<bool>()) {
        let ops = random_rc(seed, 60, p);
        let method = if eks { Method::Eks } else { Method::Mm };
        let basis = build_basis(&ops, method, ops.b(), k, BasisOptions::default()).unwrap();
        prop_assert!(basis.orthonormality_defect() <= 1e-9);
        prop_assert!(basis.ncols() <= method.columns_per_port(k) * p);
        let mut end = 0;
        for entry in &basis.ledger {
            prop_assert_eq!(entry.columns.start, end);
            prop_assert!(entry.columns.end >= entry.columns.start);
            end = entry.columns.end;
        }
        prop_assert_eq!(end, basis.ncols());
    }

    #[test]
    fn standard_basis_contains_forward_powers(seed in any::<u64>(), p in 1usize..3) {
        let ops = random_rc(seed, 100, p);
        let b_e = ops.solve_a(ops.b()).unwrap();
        let basis = standard_basis(&ops, &b_e, 3).unwrap();
        let mut v = b_e;
        for _ in 0..3 {
            prop_assert!(containment_residual(&basis.x, &v).unwrap() <= 1e-8);
            v = ops.apply_ae(&v).unwrap();
        }
    }

    #[test]
    fn extended_basis_contains_both_directions(seed in any::<u64>()) {
        let ops = random_rc(seed, 100, 1);
        let b_e = ops.solve_a(ops.b()).unwrap();
        let basis = extended_basis(&ops, &b_e, 4).unwrap();
        let (mut fwd, mut bwd) = (b_e.clone(), b_e);
        for _ in 0..4 {
            prop_assert!(containment_residual(&basis.x, &fwd).unwrap() <= 1e-8);
            prop_assert!(containment_residual(&basis.x, &bwd).unwrap() <= 1e-8);
            fwd = ops.apply_ae(&fwd).unwrap();
            bwd = ops.apply_ae_inv(&bwd).unwrap();
        }
    }

    #[test]
    fn symmetric_projection_matches_2k_moments(seed in any::<u64>(), k in 1usize..5, p in 1usize..3) {
        let ops = random_rc(seed, 60, p);
        let basis = standard_basis(&ops, &ops.solve_a(ops.b()).unwrap(), k).unwrap();
        let inputs: Vec<usize> = (0..p).collect();
        let rom = project(&ops, &basis, &inputs).unwrap();
        let want = dense_of(&ops).moments(2 * k - 1);
        let got = rom.moments(2 * k - 1).unwrap();
        for (g, w) in got.iter().zip(&want) {
            prop_assert!(rel_dev(&g.to_nalgebra(), w) <= 1e-6);
        }
        prop_assert!(rom.e.sub(&rom.e.transpose()).unwrap().max_abs() <= 1e-12 * rom.e.max_abs());
    }

    #[test]
    fn nonsymmetric_projection_matches_k_moments(seed in any::<u64>(), k in 1usize..4, eks in any::<bool>()) {
        let model = singular_rlc(seed);
        let ops = make_operators(&model).unwrap();
        let method = if eks { Method::Eks } else { Method::Mm };
        let pd = reduce_all_ports(&ops, method, k).unwrap();
        let want = moments(&ops, k - 1, 10_000).unwrap();
        for pr in &pd.ports {
            let got = pr.rom.moments(k - 1).unwrap();
            for (g, w) in got.iter().zip(&want) {
                let w = w.select_columns(&[pr.port]).to_nalgebra();
                prop_assert!(rel_dev(&g.to_nalgebra(), &w) <= 1e-6);
            }
        }
    }

    #[test]
    fn eks_matches_markov_parameters(seed in any::<u64>(), k in 1usize..4) {
        // Expansion at infinity: L (E⁻¹A)^j E⁻¹ B for j < k.
        let ops = random_rc(seed, 60, 1);
        let basis = extended_basis(&ops, &ops.solve_a(ops.b()).unwrap(), k).unwrap();
        let rom = project(&ops, &basis, &[0]).unwrap();
        let d = dense_of(&ops);
        let einv_a = d.e.clone().try_inverse().unwrap() * &d.a;
        let mut v = d.e.clone().try_inverse().unwrap() * &d.b;
        let re = rom.e.to_nalgebra();
        let ra = rom.a.to_nalgebra();
        let re_inv = re.clone().try_inverse().unwrap();
        let mut rv = &re_inv * rom.b.to_nalgebra();
        for _ in 0..k {
            let want = &d.l * &v;
            let got = rom.l.to_nalgebra() * &rv;
            prop_assert!(rel_dev(&got, &want) <= 1e-6);
            v = &einv_a * v;
            rv = &re_inv * (&ra * rv);
        }
    }

    #[test]
    fn full_basis_reproduces_transfer(seed in any::<u64>(), singular in any::<bool>()) {
        let model = if singular { singular_rlc(seed) } else { small_ladder(seed) };
        let ops = make_operators(&model).unwrap();
        let x = DenseBlock::identity(ops.dim());
        let mut basis = standard_basis(&ops, &ops.solve_a(ops.b()).unwrap(), 1).unwrap();
        basis.x = x;
        let inputs: Vec<usize> = (0..model.p).collect();
        let rom = project(&ops, &basis, &inputs).unwrap();
        let dense = pencil(&model);
        for w in [1.0, 1e6, 1e9, 1e11] {
            let s = Complex::new(0.0, w);
            prop_assert!(crel_dev(&rom.transfer(s).unwrap(), &dense.transfer(s)) <= 1e-9);
        }
    }

    #[test]
    fn port_permutation_permutes_columns(seed in any::<u64>(), eks in any::<bool>()) {
        let model = build(&SynthSpec::new(SynthKind::RcMesh, 6, 3, seed));
        let perm = [2usize, 0, 1];
        let permuted = model.with_inputs(&perm);
        let method = if eks { Method::Eks } else { Method::Mm };
        let grid = FrequencyGrid::log_spaced(1e3, 1e12, 7).unwrap();
        let h = eval_reduced(&reduce_all_ports(&make_operators(&model).unwrap(), method, 2).unwrap(), &grid).unwrap();
        let hp = eval_reduced(&reduce_all_ports(&make_operators(&permuted).unwrap(), method, 2).unwrap(), &grid).unwrap();
        for (a, b) in h.values.iter().zip(&hp.values) {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            for (j, &src) in perm.iter().enumerate() {
                prop_assert_eq!(b.column(j), a.column(src));
            }
        }
    }
}

fn small_ladder(seed: u64) -> DescriptorModel {
    build(&SynthSpec::new(
        SynthKind::RcLadder,
        30 + (seed % 50) as usize,
        2,
        seed,
    ))
}

#[test]
fn reduction_is_deterministic_across_worker_counts() {
    let model = build(&SynthSpec::new(SynthKind::PowerGrid, 12, 4, 17));
    let ops = make_operators(&model).unwrap();
    for method in [Method::Mm, Method::Eks] {
        let a = reduce_all_ports(&ops, method, 2).unwrap();
        let b = reduce_all_ports_with(
            &ops,
            method,
            2,
            &ReduceOptions {
                workers: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        a.write_dir(da.path()).unwrap();
        b.write_dir(db.path()).unwrap();
        for pr in &a.ports {
            let name = format!("port_{:04}", pr.port);
            for f in ["E.mtx", "A.mtx", "B.mtx", "L.mtx", "D.mtx", "manifest.json"] {
                let x = std::fs::read(da.path().join(&name).join(f)).unwrap();
                let y = std::fs::read(db.path().join(&name).join(f)).unwrap();
                assert_eq!(x, y, "{method} {name}/{f}");
            }
        }
        assert_eq!(
            std::fs::read(da.path().join("index.json")).unwrap(),
            std::fs::read(db.path().join("index.json")).unwrap()
        );
    }
}

#[test]
fn equal_order_roms_keep_dc_and_stay_bounded() {
    let model = build(&SynthSpec::new(SynthKind::PowerGrid, 16, 2, 3));
    let ops = make_operators(&model).unwrap();
    let grid = FrequencyGrid::log_spaced(1.0, 1e12, 60).unwrap();
    let reference = eval_original(&model, &grid).unwrap();
    let peak = reference
        .values
        .iter()
        .flatten()
        .map(eksmor::analysis::sigma_max)
        .fold(0.0, f64::max);
    for (method, k) in [(Method::Mm, 2), (Method::Eks, 1)] {
        let resp = eval_reduced(&reduce_all_ports(&ops, method, k).unwrap(), &grid).unwrap();
        let curve = max_error(&reference, &resp).unwrap();
        assert!(curve.sigma[0].unwrap() <= 1e-9 * peak, "{method} misses DC");
        assert!(curve.max_sigma.is_finite() && curve.max_sigma <= 10.0 * peak);
    }
}
