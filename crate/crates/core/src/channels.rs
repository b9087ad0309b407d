//! Dynamics of the probe qubit while it is inside the cloaking shell.
//!
//! Every channel has a closed-form solver ([`ChannelSpec::apply`]) and an
//! independent fixed-step RK4 integrator ([`integrate_fixed_step`]) over the
//! corresponding master equation, used to cross-check the closed forms.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::qops::{
    evolve_unitary, partial_trace_second, pauli, tensor, trace_out_second, unitary_from_hamiltonian, ComplexMatrix,
    DensityMatrix, C64,
};

/// Largest admissible `rate * step` for the fixed-step integrator.
pub const MAX_RATE_STEP: f64 = 0.1;

/// Time-parameterized dynamics applied for the full dwell time.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelSpec {
    /// Free space.
    Identity,
    /// Pure dephasing of the qubit at rate `gamma`.
    Dephasing { gamma: f64 },
    /// Exchange coupling J(σ₊¹σ₋² + σ₊²σ₋¹) to a hidden ancilla spin.
    ExchangeCoupling { j: f64, ancilla: DensityMatrix },
}

fn check_rate(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be finite and non-negative, got {value}") })
    }
}

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter { name: "t", reason: format!("non-finite time {t}") });
    }
    Ok(())
}

impl ChannelSpec {
    pub fn dephasing(gamma: f64) -> Result<Self> {
        check_rate("gamma", gamma)?;
        Ok(Self::Dephasing { gamma })
    }

    /// Exchange coupling with the ancilla prepared in |↓⟩⟨↓|.
    pub fn exchange(j: f64) -> Result<Self> {
        Self::exchange_with_ancilla(j, DensityMatrix::down())
    }

    pub fn exchange_with_ancilla(j: f64, ancilla: DensityMatrix) -> Result<Self> {
        check_rate("J", j)?;
        if ancilla.dim() != 2 {
            return Err(Error::InvalidDimension { expected: "2", found: ancilla.dim() });
        }
        Ok(Self::ExchangeCoupling { j, ancilla })
    }

    /// The rate that sets the time scale of the channel (0 for identity).
    pub fn rate(&self) -> f64 {
        match self {
            Self::Identity => 0.0,
            Self::Dephasing { gamma } => *gamma,
            Self::ExchangeCoupling { j, .. } => *j,
        }
    }

    /// Closed-form evolution of `rho` for a total time `t`.
    ///
    /// The exchange channel always starts from `rho ⊗ ancilla` at t = 0;
    /// its reduced dynamics is not a semigroup, so it must not be applied
    /// piecewise.
    pub fn apply(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        check_time(t)?;
        if rho.dim() != 2 {
            return Err(Error::InvalidDimension { expected: "2", found: rho.dim() });
        }
        match self {
            Self::Identity => Ok(rho.clone()),
            Self::Dephasing { gamma } => {
                let decay = (-gamma * t).exp();
                let m = rho.matrix();
                let out =
                    ComplexMatrix::from_rows(2, &[m.get(0, 0), m.get(0, 1) * decay, m.get(1, 0) * decay, m.get(1, 1)])?;
                Ok(DensityMatrix::trusted(out))
            }
            Self::ExchangeCoupling { j, ancilla } => {
                let joint = tensor(rho, ancilla)?;
                let u = unitary_from_hamiltonian(&exchange_hamiltonian(*j), t)?;
                partial_trace_second(&evolve_unitary(&joint, &u)?)
            }
        }
    }
}

/// A map from the state entering the shell to the state leaving it after a
/// dwell time `t`.
pub trait QubitChannel {
    fn propagate(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix>;
}

impl QubitChannel for ChannelSpec {
    fn propagate(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        self.apply(rho, t)
    }
}

/// H = J(σ₊ ⊗ σ₋ + σ₋ ⊗ σ₊), ħ = 1.
pub fn exchange_hamiltonian(j: f64) -> ComplexMatrix {
    let a = pauli::raising().kron(&pauli::lowering()).expect("4x4");
    let b = pauli::lowering().kron(&pauli::raising()).expect("4x4");
    &(&a + &b) * j
}

/// Writes (γ/4)[2σ_z ρ σ_z − σ_z²ρ − ρσ_z²] into `out`.
fn dephasing_into(
    rho: &DMatrix<C64>,
    sz: &DMatrix<C64>,
    sz2: &DMatrix<C64>,
    gamma: f64,
    out: &mut DMatrix<C64>,
    scratch: &mut DMatrix<C64>,
) {
    let one = C64::new(1.0, 0.0);
    scratch.gemm(one, sz, rho, C64::new(0.0, 0.0));
    out.gemm(C64::new(2.0, 0.0), scratch, sz, C64::new(0.0, 0.0));
    out.gemm(-one, sz2, rho, one);
    out.gemm(-one, rho, sz2, one);
    *out *= C64::new(gamma / 4.0, 0.0);
}

/// Writes −i[H, ρ₁₂] into `out`.
fn liouville_into(rho12: &DMatrix<C64>, h: &DMatrix<C64>, out: &mut DMatrix<C64>) {
    let minus_i = C64::new(0.0, -1.0);
    out.gemm(minus_i, h, rho12, C64::new(0.0, 0.0));
    out.gemm(-minus_i, rho12, h, C64::new(1.0, 0.0));
}

/// (γ/4)[2σ_z ρ σ_z − σ_z²ρ − ρσ_z²] for a 2×2 operator.
pub fn lindblad_rhs(rho: &ComplexMatrix, gamma: f64) -> Result<ComplexMatrix> {
    if rho.dim() != 2 {
        return Err(Error::InvalidDimension { expected: "2", found: rho.dim() });
    }
    let sz = pauli::z().into_dmatrix();
    let (mut out, mut scratch) = (DMatrix::zeros(2, 2), DMatrix::zeros(2, 2));
    dephasing_into(rho.as_dmatrix(), &sz, &(&sz * &sz), gamma, &mut out, &mut scratch);
    ComplexMatrix::from_dmatrix(out)
}

/// −i[H, ρ₁₂] with the exchange Hamiltonian at coupling `j`.
pub fn liouville_rhs(rho12: &ComplexMatrix, j: f64) -> Result<ComplexMatrix> {
    if rho12.dim() != 4 {
        return Err(Error::InvalidDimension { expected: "4", found: rho12.dim() });
    }
    let mut out = DMatrix::zeros(4, 4);
    liouville_into(rho12.as_dmatrix(), exchange_hamiltonian(j).as_dmatrix(), &mut out);
    ComplexMatrix::from_dmatrix(out)
}

/// Step count for the fixed-step integrator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntegratorConfig {
    steps: u64,
}

impl IntegratorConfig {
    pub fn new(steps: u64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter { name: "steps", reason: "must be at least 1".into() });
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { steps: 10_000 }
    }
}

fn add_scaled(y: &mut DMatrix<C64>, a: f64, x: &DMatrix<C64>) {
    y.zip_apply(x, |yi, xi| *yi += xi * a);
}

/// `rhs(y, out, scratch)` writes dy/dt into `out`; buffers are reused
/// across steps.
fn rk4<F>(y0: DMatrix<C64>, t: f64, steps: u64, rhs: F) -> DMatrix<C64>
where
    F: Fn(&DMatrix<C64>, &mut DMatrix<C64>, &mut DMatrix<C64>),
{
    let h = t / steps as f64;
    let n = y0.nrows();
    let (mut k, mut acc, mut probe, mut scratch) =
        (DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n));
    let mut y = y0;
    for _ in 0..steps {
        rhs(&y, &mut k, &mut scratch);
        acc.copy_from(&k);
        probe.copy_from(&y);
        add_scaled(&mut probe, 0.5 * h, &k);
        rhs(&probe, &mut k, &mut scratch);
        add_scaled(&mut acc, 2.0, &k);
        probe.copy_from(&y);
        add_scaled(&mut probe, 0.5 * h, &k);
        rhs(&probe, &mut k, &mut scratch);
        add_scaled(&mut acc, 2.0, &k);
        probe.copy_from(&y);
        add_scaled(&mut probe, h, &k);
        rhs(&probe, &mut k, &mut scratch);
        add_scaled(&mut acc, 1.0, &k);
        add_scaled(&mut y, h / 6.0, &acc);
    }
    y
}

/// Classic RK4 over the master equation of `spec`, as an independent
/// numerical route to [`ChannelSpec::apply`].
pub fn integrate_fixed_step(
    spec: &ChannelSpec,
    rho: &DensityMatrix,
    t: f64,
    cfg: IntegratorConfig,
) -> Result<DensityMatrix> {
    check_time(t)?;
    if rho.dim() != 2 {
        return Err(Error::InvalidDimension { expected: "2", found: rho.dim() });
    }
    if t == 0.0 || matches!(spec, ChannelSpec::Identity) {
        return Ok(rho.clone());
    }
    let rate = spec.rate();
    let steps = cfg.steps();
    if rate * t / steps as f64 >= MAX_RATE_STEP {
        let too_coarse = |n: u64| rate * t / n as f64 >= MAX_RATE_STEP;
        let mut required = (rate * t / MAX_RATE_STEP).floor() as u64 + 1;
        while too_coarse(required) {
            required += 1;
        }
        while required > 1 && !too_coarse(required - 1) {
            required -= 1;
        }
        return Err(Error::StepSizeTooLarge { given: steps, required });
    }
    let out = match spec {
        ChannelSpec::Identity => unreachable!(),
        ChannelSpec::Dephasing { gamma } => {
            let sz = pauli::z().into_dmatrix();
            let sz2 = &sz * &sz;
            let y = rk4(rho.matrix().as_dmatrix().clone(), t, steps, |m, out, scratch| {
                dephasing_into(m, &sz, &sz2, *gamma, out, scratch)
            });
            ComplexMatrix::from_dmatrix(y)?
        }
        ChannelSpec::ExchangeCoupling { j, ancilla } => {
            let h = exchange_hamiltonian(*j).into_dmatrix();
            let joint = tensor(rho, ancilla)?.into_matrix().into_dmatrix();
            let y = rk4(joint, t, steps, |m, out, _| liouville_into(m, &h, out));
            trace_out_second(&ComplexMatrix::from_dmatrix(y)?)
        }
    };
    Ok(DensityMatrix::trusted(out.hermitian_part()))
}

/// A channel whose propagation runs the fixed-step integrator instead of
/// the closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratedChannel {
    pub spec: ChannelSpec,
    pub config: IntegratorConfig,
}

impl QubitChannel for IntegratedChannel {
    fn propagate(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        integrate_fixed_step(&self.spec, rho, t, self.config)
    }
}
