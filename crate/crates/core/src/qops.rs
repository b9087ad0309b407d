//! Complex-operator algebra for one- and two-qubit density matrices.
//!
//! Basis ordering: qubit index 0 is |↑⟩ (or |H⟩) and index 1 is |↓⟩ (or
//! |V⟩). Two-qubit states use the order (↑↑, ↑↓, ↓↑, ↓↓), i.e. the first
//! factor is the most significant index. ħ = 1 throughout.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default absolute entrywise tolerance for matrix comparisons.
pub const ENTRY_TOL: f64 = 1e-12;
/// Smallest eigenvalue a density matrix may have.
pub const PSD_TOL: f64 = -1e-10;
/// Tolerance on U†U = I.
pub const UNITARY_TOL: f64 = 1e-10;
/// Measurement branches below this probability are dropped.
pub const BRANCH_CUTOFF: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 4 {
        Ok(())
    } else {
        Err(Error::InvalidDimension { expected: "2 or 4", found: dim })
    }
}

/// A square complex matrix of dimension 2 or 4.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::InvalidDimension { expected: "dim*dim entries", found: entries.len() });
        }
        Ok(Self(DMatrix::from_row_slice(dim, dim, entries)))
    }

    /// Wraps an existing nalgebra matrix.
    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidDimension { expected: "square matrix", found: m.ncols() });
        }
        check_dim(m.nrows())?;
        Ok(Self(m))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self(DMatrix::zeros(dim, dim)))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self(DMatrix::identity(dim, dim)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        check_dim(diag.len())?;
        let mut m = DMatrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        Ok(Self(m))
    }

    /// |ψ⟩⟨ψ| for an (unnormalized) ket.
    pub fn outer(ket: &[C64]) -> Result<Self> {
        check_dim(ket.len())?;
        let n = ket.len();
        Ok(Self(DMatrix::from_fn(n, n, |i, j| ket[i] * ket[j].conj())))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let m = self.0.kronecker(&other.0);
        check_dim(m.nrows())?;
        Ok(Self(m))
    }

    /// [A, B] = AB − BA.
    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// Largest entrywise absolute difference. Panics on mismatched dimensions.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim() && self.max_abs_diff(other) <= tol
    }

    /// Max |A − A†| entry.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Max |U†U − I| entry.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = Self(self.0.adjoint() * &self.0);
        prod.max_abs_diff(&Self(DMatrix::identity(self.dim(), self.dim())))
    }

    /// (A + A†)/2.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    /// Eigenvalues (ascending) and eigenvectors (columns) of the Hermitian
    /// part of the matrix.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, DMatrix<C64>) {
        let eig = self.hermitian_part().0.symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |i, j| eig.eigenvectors[(i, order[j])]);
        (values, vectors)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: f64) -> ComplexMatrix {
        ComplexMatrix(&self.0 * C64::new(rhs, 0.0))
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Pauli and ladder operators on a single qubit.
pub mod pauli {
    use super::*;

    fn m2(a: C64, b: C64, c: C64, d: C64) -> ComplexMatrix {
        ComplexMatrix(DMatrix::from_row_slice(2, 2, &[a, b, c, d]))
    }

    pub fn identity() -> ComplexMatrix {
        m2(ONE, ZERO, ZERO, ONE)
    }

    pub fn x() -> ComplexMatrix {
        m2(ZERO, ONE, ONE, ZERO)
    }

    pub fn y() -> ComplexMatrix {
        m2(ZERO, -I, I, ZERO)
    }

    pub fn z() -> ComplexMatrix {
        m2(ONE, ZERO, ZERO, -ONE)
    }

    /// σ₊ = |↑⟩⟨↓|
    pub fn raising() -> ComplexMatrix {
        m2(ZERO, ONE, ZERO, ZERO)
    }

    /// σ₋ = |↓⟩⟨↑|
    pub fn lowering() -> ComplexMatrix {
        m2(ZERO, ZERO, ONE, ZERO)
    }
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let defect = matrix.hermiticity_defect();
        if defect > ENTRY_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > ENTRY_TOL {
            return Err(Error::NotNormalized(tr.re));
        }
        let (eigs, _) = matrix.hermitian_eigen();
        if eigs[0] < PSD_TOL {
            return Err(Error::NotPositive(eigs[0]));
        }
        Ok(Self(matrix))
    }

    /// Wraps the output of a trace- and positivity-preserving map without
    /// re-running the eigenvalue check.
    pub(crate) fn trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.hermiticity_defect() < 1e-8);
        Self(matrix)
    }

    /// Normalized pure state from a ket.
    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm2: f64 = ket.iter().map(|c| c.norm_sqr()).sum();
        if norm2 <= 0.0 || !norm2.is_finite() {
            return Err(Error::InvalidParameter { name: "ket", reason: "zero or non-finite norm".into() });
        }
        let m = ComplexMatrix::outer(ket)?;
        Ok(Self(m.scale(C64::new(1.0 / norm2, 0.0))))
    }

    /// I/d.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let m = ComplexMatrix::identity(dim)?;
        Ok(Self(m.scale(C64::new(1.0 / dim as f64, 0.0))))
    }

    /// Qubit state (I + r·σ)/2 for a Bloch vector with |r| ≤ 1.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if len > 1.0 + ENTRY_TOL || !len.is_finite() {
            return Err(Error::InvalidParameter { name: "bloch", reason: format!("length {len} exceeds 1") });
        }
        let half = 0.5;
        let m = ComplexMatrix(DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(half * (1.0 + r[2]), 0.0),
                C64::new(half * r[0], -half * r[1]),
                C64::new(half * r[0], half * r[1]),
                C64::new(half * (1.0 - r[2]), 0.0),
            ],
        ));
        Ok(Self(m))
    }

    pub fn up() -> Self {
        Self(ComplexMatrix::from_real_diagonal(&[1.0, 0.0]).expect("2x2"))
    }

    pub fn down() -> Self {
        Self(ComplexMatrix::from_real_diagonal(&[0.0, 1.0]).expect("2x2"))
    }

    /// |+⟩⟨+| with |+⟩ = (|↑⟩ + |↓⟩)/√2.
    pub fn plus() -> Self {
        Self::from_bloch([1.0, 0.0, 0.0]).expect("unit Bloch vector")
    }

    /// |−⟩⟨−| with |−⟩ = (|↑⟩ − |↓⟩)/√2.
    pub fn minus() -> Self {
        Self::from_bloch([-1.0, 0.0, 0.0]).expect("unit Bloch vector")
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0.get(row, col)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.hermitian_eigen().0[0]
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// Bloch vector (⟨X⟩, ⟨Y⟩, ⟨Z⟩) of a qubit state.
    pub fn bloch_vector(&self) -> Result<[f64; 3]> {
        if self.dim() != 2 {
            return Err(Error::InvalidDimension { expected: "2", found: self.dim() });
        }
        let off = self.get(1, 0);
        Ok([2.0 * off.re, 2.0 * off.im, (self.get(0, 0) - self.get(1, 1)).re])
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.0.approx_eq(&other.0, tol)
    }
}

/// Setting label of a qubit measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        };
        f.write_str(s)
    }
}

/// Measurement outcome, valued ±1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

/// A two-outcome projective qubit measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasis {
    label: Axis,
    plus: DensityMatrix,
    minus: DensityMatrix,
}

impl MeasurementBasis {
    /// Builds a basis from its two projectors, checking completeness,
    /// orthogonality and rank one.
    pub fn from_projectors(label: Axis, plus: DensityMatrix, minus: DensityMatrix) -> Result<Self> {
        if plus.dim() != 2 || minus.dim() != 2 {
            return Err(Error::InvalidBasis("projectors must be 2x2".into()));
        }
        let id = pauli::identity();
        let zero = ComplexMatrix::zeros(2)?;
        let sum = plus.matrix() + minus.matrix();
        if !sum.approx_eq(&id, ENTRY_TOL) {
            return Err(Error::InvalidBasis("projectors do not sum to identity".into()));
        }
        if !(plus.matrix() * minus.matrix()).approx_eq(&zero, ENTRY_TOL) {
            return Err(Error::InvalidBasis("projectors are not orthogonal".into()));
        }
        for p in [&plus, &minus] {
            if !(p.matrix() * p.matrix()).approx_eq(p.matrix(), ENTRY_TOL) {
                return Err(Error::InvalidBasis("projector is not idempotent".into()));
            }
        }
        Ok(Self { label, plus, minus })
    }

    /// Eigenbasis of the Pauli operator along `axis`.
    pub fn pauli(axis: Axis) -> Self {
        let r = match axis {
            Axis::X => [1.0, 0.0, 0.0],
            Axis::Y => [0.0, 1.0, 0.0],
            Axis::Z => [0.0, 0.0, 1.0],
        };
        let neg = r.map(|c: f64| -c);
        Self {
            label: axis,
            plus: DensityMatrix::from_bloch(r).expect("unit vector"),
            minus: DensityMatrix::from_bloch(neg).expect("unit vector"),
        }
    }

    pub fn x() -> Self {
        Self::pauli(Axis::X)
    }

    pub fn y() -> Self {
        Self::pauli(Axis::Y)
    }

    pub fn z() -> Self {
        Self::pauli(Axis::Z)
    }

    pub fn label(&self) -> Axis {
        self.label
    }

    pub fn projector(&self, outcome: Outcome) -> &DensityMatrix {
        match outcome {
            Outcome::Plus => &self.plus,
            Outcome::Minus => &self.minus,
        }
    }

    /// Π₊ − Π₋.
    pub fn observable(&self) -> ComplexMatrix {
        self.plus.matrix() - self.minus.matrix()
    }

    /// Conjugates both projectors by a Bloch-sphere rotation of `angle`
    /// about the ŷ axis. The label is kept as the nominal setting.
    pub fn rotated_about_y(&self, angle: f64) -> Self {
        let u = rotation_y(angle);
        let conj = |p: &DensityMatrix| DensityMatrix::trusted((&(&u * p.matrix()) * &u.adjoint()).hermitian_part());
        Self { label: self.label, plus: conj(&self.plus), minus: conj(&self.minus) }
    }

    /// True when every cross-basis projector overlap Tr(Π_a Π'_b) is 1/2.
    pub fn is_unbiased_with(&self, other: &Self, tol: f64) -> bool {
        Outcome::BOTH.iter().all(|&a| {
            Outcome::BOTH.iter().all(|&b| {
                let overlap = (self.projector(a).matrix() * other.projector(b).matrix()).trace().re;
                (overlap - 0.5).abs() <= tol
            })
        })
    }
}

/// exp(−iθσ_y/2).
pub fn rotation_y(angle: f64) -> ComplexMatrix {
    let (s, c) = (0.5 * angle).sin_cos();
    ComplexMatrix(DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)],
    ))
}

/// One branch of a projective measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub outcome: Outcome,
    pub probability: f64,
    pub post_state: DensityMatrix,
}

/// ρ_A ⊗ ρ_B for two qubit states.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    for d in [a.dim(), b.dim()] {
        if d != 2 {
            return Err(Error::InvalidDimension { expected: "2", found: d });
        }
    }
    Ok(DensityMatrix::trusted(a.matrix().kron(b.matrix())?))
}

/// Tr₂ of a two-qubit state.
pub fn partial_trace_second(rho_ab: &DensityMatrix) -> Result<DensityMatrix> {
    if rho_ab.dim() != 4 {
        return Err(Error::InvalidDimension { expected: "4", found: rho_ab.dim() });
    }
    Ok(DensityMatrix::trusted(trace_out_second(rho_ab.matrix())))
}

pub(crate) fn trace_out_second(m: &ComplexMatrix) -> ComplexMatrix {
    let reduced = DMatrix::from_fn(2, 2, |i, j| (0..2).map(|k| m.get(2 * i + k, 2 * j + k)).sum());
    ComplexMatrix(reduced)
}

/// Born-rule probabilities and Lüders post-measurement states.
pub fn measure(rho: &DensityMatrix, basis: &MeasurementBasis) -> Result<Vec<Branch>> {
    if rho.dim() != 2 {
        return Err(Error::InvalidDimension { expected: "2", found: rho.dim() });
    }
    let mut branches = Vec::with_capacity(2);
    for outcome in Outcome::BOTH {
        let proj = basis.projector(outcome).matrix();
        let probability = (proj * rho.matrix()).trace().re;
        if probability < BRANCH_CUTOFF {
            continue;
        }
        let post = &(proj * rho.matrix()) * proj;
        let post = post.scale(C64::new(1.0 / probability, 0.0)).hermitian_part();
        branches.push(Branch { outcome, probability: probability.min(1.0), post_state: DensityMatrix::trusted(post) });
    }
    Ok(branches)
}

/// Tr[(Π₊ − Π₋)ρ], clamped to [−1, 1].
pub fn expectation(rho: &DensityMatrix, basis: &MeasurementBasis) -> f64 {
    let value = (&basis.observable() * rho.matrix()).trace().re;
    value.clamp(-1.0, 1.0)
}

/// U = exp(−iHt) via eigendecomposition of the Hermitian generator.
pub fn unitary_from_hamiltonian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let defect = h.hermiticity_defect();
    if defect > ENTRY_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let (values, vectors) = h.hermitian_eigen();
    let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&e| C64::from_polar(1.0, -e * t)),
    ));
    Ok(ComplexMatrix(&vectors * phases * vectors.adjoint()))
}

/// UρU†.
pub fn evolve_unitary(rho: &DensityMatrix, u: &ComplexMatrix) -> Result<DensityMatrix> {
    if rho.dim() != u.dim() {
        return Err(Error::DimensionMismatch { left: rho.dim(), right: u.dim() });
    }
    let defect = u.unitarity_defect();
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let out = &(u * rho.matrix()) * &u.adjoint();
    Ok(DensityMatrix::trusted(out.hermitian_part()))
}
