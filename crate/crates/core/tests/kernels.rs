mod common;

use common::*;
use eksmor::krylov::make_operators;
use eksmor::netlist::{assemble_mna, parse_netlist, AssembleOptions};
use eksmor::orth::{orth_wrt, qr_orth, DEFAULT_RANK_TOL};
use eksmor::regularize::{detect_and_partition, Partition};
use eksmor::sparse::spmm;
use eksmor::synth::{SynthKind, SynthSpec};
use eksmor::{DenseBlock, Factorization, SparseMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_block(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseBlock {
    DenseBlock::from_col_major(
        r,
        c,
        (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

/// Sparse nonsymmetric matrix with a dominant diagonal, condition well
/// below 1e6.
fn dominant_sparse(rng: &mut ChaCha8Rng, n: usize) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        let mut row = 0.0;
        for _ in 0..3 {
            let j = rng.random_range(0..n);
            if j != i {
                let v = rng.random_range(-1.0..1.0);
                row += f64::abs(v);
                t.push((i, j, v));
            }
        }
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        t.push((i, i, sign * (row + rng.random_range(0.5..2.0))));
    }
    SparseMatrix::from_triplets(n, n, &t).unwrap()
}

fn fro(m: &DenseBlock) -> f64 {
    m.norm_fro()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lu_relative_residual(seed in any::<u64>(), n in 2usize..120, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = dominant_sparse(&mut rng, n);
        let r = random_block(&mut rng, n, k);
        let y = Factorization::new(&a).unwrap().solve(&r).unwrap();
        let res = spmm(&a, &y).unwrap().sub(&r).unwrap();
        prop_assert!(fro(&res) / fro(&r) <= 1e-9);
    }

    #[test]
    fn qr_orth_is_idempotent(seed in any::<u64>(), n in 5usize..60, c in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_block(&mut rng, n, c.min(n));
        let q1 = qr_orth(&x, DEFAULT_RANK_TOL);
        let q2 = qr_orth(&q1, DEFAULT_RANK_TOL);
        prop_assert_eq!(q1.ncols(), q2.ncols());
        prop_assert!(q2.orthonormality_defect() <= 1e-10);
        // Sine of the largest principal angle between the two spans.
        let (a, b) = (q1.to_nalgebra(), q2.to_nalgebra());
        let sin = (&b - &a * (a.transpose() * &b)).singular_values().max();
        prop_assert!(sin <= 1e-9);
        // The original columns lie in the span.
        let p = q1.to_nalgebra();
        let xn = x.to_nalgebra();
        let r = &xn - &p * (p.transpose() * &xn);
        prop_assert!(r.norm() <= 1e-10 * xn.norm());
    }

    #[test]
    fn orth_wrt_matches_projector_and_appends_orthonormally(seed in any::<u64>(), p in 1usize..4, blocks in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 40;
        let xj = qr_orth(&random_block(&mut rng, n, 2 * p * blocks), DEFAULT_RANK_TOL);
        prop_assume!(xj.ncols() == 2 * p * blocks);
        let x1 = random_block(&mut rng, n, p);
        let got = orth_wrt(&x1, &xj, p).unwrap();
        let q = xj.to_nalgebra();
        let want = x1.to_nalgebra() - &q * (q.transpose() * x1.to_nalgebra());
        prop_assert!(max_abs(&(got.to_nalgebra() - &want)) <= 1e-10 * max_abs(&want).max(1.0));
        let grown = xj.hcat(&qr_orth(&got, DEFAULT_RANK_TOL)).unwrap();
        prop_assert!(grown.orthonormality_defect() <= 1e-9);
    }

    #[test]
    fn spmm_is_linear(seed in any::<u64>(), n in 1usize..50, k in 1usize..4, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = dominant_sparse(&mut rng, n);
        let x = random_block(&mut rng, n, k);
        let y = random_block(&mut rng, n, k);
        let lhs = spmm(&a, &x.lin_comb(alpha, &y, beta).unwrap()).unwrap();
        let rhs = spmm(&a, &x).unwrap().lin_comb(alpha, &spmm(&a, &y).unwrap(), beta).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-13 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn stamped_conductance_is_symmetric_and_dominant(seed in any::<u64>(), side in 3usize..12, kind in 0usize..3) {
        let kind = [SynthKind::RcLadder, SynthKind::RcMesh, SynthKind::PowerGrid][kind];
        let model = build(&SynthSpec::new(kind, side.max(3) * if kind == SynthKind::RcLadder { 5 } else { 1 }, 1, seed));
        let g = &model.g;
        prop_assert_eq!(g.asymmetry(), 0.0);
        let d = g.to_dense();
        for i in 0..g.nrows() {
            let off: f64 = (0..g.ncols()).filter(|&j| j != i).map(|j| d[(i, j)].abs()).sum();
            prop_assert!(d[(i, i)] >= off * (1.0 - 1e-12));
        }
    }

    #[test]
    fn serialized_circuit_reparses_to_same_model(seed in any::<u64>(), side in 3usize..9, rlc in any::<bool>()) {
        let kind = if rlc { SynthKind::RlcMesh } else { SynthKind::PowerGrid };
        let circuit = SynthSpec::new(kind, side, 2, seed).build().unwrap();
        let opts = AssembleOptions::default();
        let once = assemble_mna(&circuit, &opts).unwrap();
        let twice = assemble_mna(&parse_netlist(&circuit.to_netlist()).unwrap(), &opts).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn e_operators_are_inverse(seed in any::<u64>(), singular in any::<bool>()) {
        let model = if singular { singular_rlc(seed) } else { rc_ladder(seed) };
        let ops = make_operators(&model).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_block(&mut rng, ops.dim(), 2);
        let back = ops.apply_ae(&ops.apply_ae_inv(&v).unwrap()).unwrap();
        prop_assert!(back.sub(&v).unwrap().max_abs() <= 1e-8 * v.max_abs());
    }

    #[test]
    fn partition_is_sound(seed in any::<u64>()) {
        let model = singular_rlc(seed);
        let Partition::Singular(pm) = detect_and_partition(&model).unwrap() else {
            return Err(TestCaseError::fail("instance not singular"));
        };
        let c = dm(&model.c);
        let permuted = DMatrix::from_fn(model.n, model.n, |i, j| c[(pm.perm[i], pm.perm[j])]);
        let tail = permuted.view((pm.n1, 0), (pm.n2, model.n));
        prop_assert!(tail.iter().all(|&v| v == 0.0));
        prop_assert!(permuted.view((0, pm.n1), (model.n, pm.n2)).iter().all(|&v| v == 0.0));
        let e = pm.e_reg();
        prop_assert!(Factorization::new(&e).unwrap().singularity().is_none());

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_block(&mut rng, pm.order(), 2);
        let ak = pm.apply_a(&k).unwrap();
        let (x1, x2) = pm.bordered_solve(&ak.row_range(0..pm.n1), &ak.row_range(pm.n1..pm.order())).unwrap();
        prop_assert!(x1.vcat(&x2).unwrap().sub(&k).unwrap().max_abs() <= 1e-9 * k.max_abs());
    }
}

#[test]
fn recovered_eliminated_voltages_satisfy_the_algebraic_rows() {
    for seed in 0..5 {
        let model = singular_rlc(seed);
        let Partition::Singular(pm) = detect_and_partition(&model).unwrap() else {
            panic!()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v1 = random_block(&mut rng, pm.n1, 1);
        let i = random_block(&mut rng, pm.m, 1);
        let u = random_block(&mut rng, model.p, 1);
        let v2 = pm.recover_v2(&v1, &i, &u).unwrap();
        // Row block of the eliminated nodes: G12ᵀ v1 + G22 v2 + W2 i = B2 u.
        let lhs = pm
            .g12
            .transpose()
            .mul_dense(&v1)
            .unwrap()
            .add(&pm.g22.mul_dense(&v2).unwrap())
            .unwrap()
            .add(&pm.w2.mul_dense(&i).unwrap())
            .unwrap();
        let rhs = pm.b2.mul_dense(&u).unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-11 * (1.0 + rhs.max_abs() + lhs.max_abs()));
        let full = pm.unpermute_nodes(&v1, &v2).unwrap();
        assert_eq!(full.nrows(), model.n);
    }
}
