#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, RngExt};
use tsteer_core::channels::{ChannelSpec, QubitChannel};
use tsteer_core::qops::{evolve_unitary, unitary_from_hamiltonian, ComplexMatrix, DensityMatrix};
use tsteer_core::Result;

pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0)
}

/// ρ = AA†/Tr(AA†) for a random complex A.
pub fn random_state<R: Rng>(rng: &mut R, dim: usize) -> DensityMatrix {
    let a = DMatrix::from_fn(dim, dim, |_, _| random_complex(rng));
    let m = &a * a.adjoint();
    let tr = m.trace();
    let m = (m.clone() + m.adjoint()) * C64::new(0.5, 0.0) / tr;
    DensityMatrix::new(ComplexMatrix::from_dmatrix(m).unwrap()).unwrap()
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let a = DMatrix::from_fn(dim, dim, |_, _| random_complex(rng));
    ComplexMatrix::from_dmatrix((&a + a.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let h = random_hermitian(rng, dim);
    unitary_from_hamiltonian(&h, 3.0 * rng.random::<f64>()).unwrap()
}

/// Unitary kick followed by pure dephasing: a generic non-identity channel.
pub struct KickedDephasing {
    pub kick: ComplexMatrix,
    pub dephasing: ChannelSpec,
}

impl QubitChannel for KickedDephasing {
    fn propagate(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        self.dephasing.apply(&evolve_unitary(rho, &self.kick)?, t)
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
