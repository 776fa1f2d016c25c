// Shared generators for the integration tests.
#![allow(dead_code)]

use cpmap::choi::{apply_choi, ChoiMatrix, KrausSet};
use cpmap::constraints::ProblemInstance;
use cpmap::linalg::{expm_herm, herm_eig};
use cpmap::{CMatrix, Complex64, HermMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn random_cmatrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_herm(rng: &mut impl Rng, p: usize, scale: f64) -> HermMatrix {
    HermMatrix::symmetrized(&random_cmatrix(rng, p, p)).scaled(scale)
}

pub fn random_unitary(rng: &mut impl Rng, p: usize) -> CMatrix {
    herm_eig(&random_herm(rng, p, 1.0)).unwrap().eigenvectors
}

/// `expm(H)` for a random Hermitian `H`: strictly positive by construction.
pub fn planted_choi(rng: &mut impl Rng, n: usize, k: usize, scale: f64) -> ChoiMatrix {
    let x = expm_herm(&random_herm(rng, n * k, scale)).unwrap();
    ChoiMatrix::from_herm(n, k, x).unwrap()
}

/// Instance whose targets are images of random inputs under `choi`.
pub fn planted_instance(rng: &mut impl Rng, choi: &ChoiMatrix, pairs: usize, tp: bool) -> ProblemInstance {
    let n = choi.n();
    let pairs = (0..pairs)
        .map(|_| {
            let a = random_cmatrix(rng, n, n);
            let b = apply_choi(choi, &a).unwrap();
            (a, b)
        })
        .collect();
    ProblemInstance::new(n, choi.k(), pairs, tp).unwrap()
}

/// Kraus set rescaled so that `Σ V V* = I_n`.
pub fn random_channel(rng: &mut impl Rng, n: usize, k: usize, count: usize) -> KrausSet {
    let vs: Vec<CMatrix> = (0..count).map(|_| random_cmatrix(rng, n, k)).collect();
    let mut s = CMatrix::zeros(n, n);
    for v in &vs {
        s += v * v.adjoint();
    }
    let eig = herm_eig(&HermMatrix::symmetrized(&s)).unwrap();
    let inv_sqrt = eig.map_spectrum(|l| 1.0 / l.sqrt()).into_matrix();
    KrausSet::new(n, k, vs.iter().map(|v| &inv_sqrt * v).collect()).unwrap()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().fold(0.0f64, |m, z| m.max(z.norm()))
}
