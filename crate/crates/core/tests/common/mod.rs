// Dense reference implementations and seeded instance families shared by
// the integration tests.
#![allow(dead_code)]

use eksmor::dense::{Complex, ComplexMatrix};
use eksmor::netlist::{assemble_mna, AssembleOptions, DescriptorModel};
use eksmor::synth::{SynthKind, SynthSpec};
use eksmor::{DenseBlock, SparseMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dm(s: &SparseMatrix) -> DMatrix<f64> {
    s.to_dense().to_nalgebra()
}

pub struct DensePencil {
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

/// `E`, `A`, `B`, `L`, `D` of the model assembled directly from its blocks.
pub fn pencil(model: &DescriptorModel) -> DensePencil {
    let (n, m, p, q) = (model.n, model.m, model.p, model.q);
    let nn = n + m;
    let mut e = DMatrix::zeros(nn, nn);
    let mut a = DMatrix::zeros(nn, nn);
    e.view_mut((0, 0), (n, n)).copy_from(&dm(&model.c));
    e.view_mut((n, n), (m, m)).copy_from(&dm(&model.inductance));
    let w = dm(&model.w);
    a.view_mut((0, 0), (n, n)).copy_from(&(-dm(&model.g)));
    a.view_mut((0, n), (n, m)).copy_from(&(-&w));
    a.view_mut((n, 0), (m, n)).copy_from(&w.transpose());
    let mut b = DMatrix::zeros(nn, p);
    b.view_mut((0, 0), (n, p)).copy_from(&dm(&model.b1));
    let mut l = DMatrix::zeros(q, nn);
    l.view_mut((0, 0), (q, n)).copy_from(&dm(&model.l1));
    DensePencil {
        e,
        a,
        b,
        l,
        d: dm(&model.d),
    }
}

pub fn cx(m: &DMatrix<f64>) -> ComplexMatrix {
    m.map(|v| Complex::new(v, 0.0))
}

impl DensePencil {
    pub fn transfer(&self, s: Complex) -> ComplexMatrix {
        let k = cx(&self.e) * s - cx(&self.a);
        let x = k.lu().solve(&cx(&self.b)).expect("nonsingular pencil");
        cx(&self.l) * x + cx(&self.d)
    }

    /// `L (A⁻¹E)^i A⁻¹ B`.
    pub fn moments(&self, i_max: usize) -> Vec<DMatrix<f64>> {
        let ainv = self.a.clone().try_inverse().expect("nonsingular A");
        let ae = &ainv * &self.e;
        let mut v = &ainv * &self.b;
        let mut out = Vec::new();
        for _ in 0..=i_max {
            out.push(&self.l * &v);
            v = &ae * v;
        }
        out
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

pub fn rel_dev(got: &DMatrix<f64>, want: &DMatrix<f64>) -> f64 {
    max_abs(&(got - want)) / max_abs(want).max(f64::MIN_POSITIVE)
}

pub fn crel_dev(got: &ComplexMatrix, want: &ComplexMatrix) -> f64 {
    (got - want).norm() / want.norm().max(f64::MIN_POSITIVE)
}

pub fn build(spec: &SynthSpec) -> DescriptorModel {
    assemble_mna(&spec.build().unwrap(), &AssembleOptions::default()).unwrap()
}

/// Random symmetric RC ladder with `L = Bᵀ`.
pub fn rc_ladder(seed: u64) -> DescriptorModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(50..=400);
    let p = rng.random_range(1..=2);
    build(&SynthSpec::new(SynthKind::RcLadder, n, p, seed))
}

/// Random singular RLC mesh, order at most 300, with 1 to 30
/// capacitance-free nodes. Inputs and outputs are random dense blocks so
/// the eliminated nodes are driven and observed too.
pub fn singular_rlc(seed: u64) -> DescriptorModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    loop {
        let side = rng.random_range(4..=10);
        let mut spec = SynthSpec::new(
            SynthKind::RlcMesh,
            side,
            rng.random_range(1..=3),
            rng.random(),
        );
        spec.rl_branches = rng.random_range(1..=30);
        spec.pads = rng.random_range(1..=4);
        let mut model = build(&spec);
        let n2 = model.capacitance_free_nodes(1e-30).len();
        if model.order() > 300 || !(1..=30).contains(&n2) {
            continue;
        }
        model.b1 = random_sparse(&mut rng, model.n, model.p);
        let q = rng.random_range(1..=3);
        model.l1 = random_sparse(&mut rng, q, model.n);
        model.q = q;
        model.d = SparseMatrix::from_dense(
            &DenseBlock::from_col_major(
                q,
                model.p,
                (0..q * model.p)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect(),
            )
            .unwrap(),
        );
        return model;
    }
}

fn random_sparse(rng: &mut ChaCha8Rng, r: usize, c: usize) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..r {
        for j in 0..c {
            if rng.random_bool(0.3) {
                t.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    t.push((0, 0, 1.0));
    SparseMatrix::from_triplets(r, c, &t).unwrap()
}

pub fn to_dense_block(m: &DMatrix<f64>) -> DenseBlock {
    DenseBlock::from_nalgebra(m)
}
