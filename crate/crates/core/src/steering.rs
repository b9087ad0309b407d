//! Temporal steering parameter S_N.
//!
//! Alice measures the qubit in setting i before it enters the shell, the
//! channel acts for the dwell time, and Bob measures the same setting i on
//! exit. With ⟨B_i⟩_a Bob's expectation conditioned on Alice's outcome a,
//!
//! ```text
//! S_N = Σ_i Σ_a P(A_i = a) ⟨B_i⟩_a²
//! ```
//!
//! Any local-hidden-state model obeys S_N ≤ 1, quantum mechanics S_N ≤ N.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::{ChannelSpec, QubitChannel};
use crate::error::{Error, Result};
use crate::qops::{expectation, measure, DensityMatrix, MeasurementBasis, Outcome};

/// Tolerance on pairwise unbiasedness of the measurement settings.
pub const MUB_TOL: f64 = 1e-10;
/// Smallest accepted shot count per setting.
pub const MIN_SHOTS: u64 = 100;

/// Measurement-setting families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisSet {
    /// {X, Z}.
    XZ,
    /// {X, Y, Z}.
    XYZ,
}

impl BasisSet {
    pub fn bases(self) -> Vec<MeasurementBasis> {
        match self {
            BasisSet::XZ => vec![MeasurementBasis::x(), MeasurementBasis::z()],
            BasisSet::XYZ => vec![MeasurementBasis::x(), MeasurementBasis::y(), MeasurementBasis::z()],
        }
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        match self {
            BasisSet::XZ => 2,
            BasisSet::XYZ => 3,
        }
    }
}

/// A steering experiment: channel, prepared state, settings and dwell time.
#[derive(Clone, Debug, PartialEq)]
pub struct SteeringTask<C = ChannelSpec> {
    channel: C,
    initial_state: DensityMatrix,
    bases: Vec<MeasurementBasis>,
    dwell_time: f64,
}

impl<C: QubitChannel> SteeringTask<C> {
    pub fn new(
        channel: C,
        initial_state: DensityMatrix,
        bases: Vec<MeasurementBasis>,
        dwell_time: f64,
    ) -> Result<Self> {
        if initial_state.dim() != 2 {
            return Err(Error::InvalidDimension { expected: "2", found: initial_state.dim() });
        }
        if !(2..=3).contains(&bases.len()) {
            return Err(Error::InvalidBasis(format!("need 2 or 3 settings, got {}", bases.len())));
        }
        for (i, a) in bases.iter().enumerate() {
            for b in &bases[i + 1..] {
                if !a.is_unbiased_with(b, MUB_TOL) {
                    return Err(Error::InvalidBasis(format!(
                        "settings {} and {} are not mutually unbiased",
                        a.label(),
                        b.label()
                    )));
                }
            }
        }
        if !(dwell_time >= 0.0 && dwell_time.is_finite()) {
            return Err(Error::NegativeTime(dwell_time));
        }
        Ok(Self { channel, initial_state, bases, dwell_time })
    }

    /// Maximally mixed input measured in {X, Z}.
    pub fn with_defaults(channel: C, dwell_time: f64) -> Result<Self> {
        Self::new(channel, DensityMatrix::maximally_mixed(2)?, BasisSet::XZ.bases(), dwell_time)
    }

    pub fn channel(&self) -> &C {
        &self.channel
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.initial_state
    }

    pub fn bases(&self) -> &[MeasurementBasis] {
        &self.bases
    }

    pub fn dwell_time(&self) -> f64 {
        self.dwell_time
    }

    pub fn n_settings(&self) -> usize {
        self.bases.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateMode {
    Exact,
    Sampled,
}

/// A conditional cell (setting, Alice outcome) that received no shots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmptyCell {
    pub basis_index: usize,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteeringEstimate {
    /// Σ_a P(a)⟨B_i⟩_a² for each setting i.
    pub per_basis_terms: Vec<f64>,
    pub s: f64,
    pub mode: EstimateMode,
    /// Zero for exact estimates.
    pub shots_per_basis: u64,
    /// Zero for exact estimates.
    pub stderr: f64,
    /// Cells skipped because no shot landed in them.
    pub empty_cells: Vec<EmptyCell>,
}

impl SteeringEstimate {
    fn exact(per_basis_terms: Vec<f64>) -> Self {
        let s = per_basis_terms.iter().sum();
        Self { per_basis_terms, s, mode: EstimateMode::Exact, shots_per_basis: 0, stderr: 0.0, empty_cells: Vec::new() }
    }

    pub fn has_warnings(&self) -> bool {
        !self.empty_cells.is_empty()
    }
}

/// Alice's outcome probability and Bob's conditional expectation.
#[derive(Clone, Copy, Debug)]
struct Cell {
    outcome: Outcome,
    p_alice: f64,
    bob_mean: f64,
}

fn conditional_cells<C: QubitChannel>(
    task: &SteeringTask<C>,
    bob_bases: &[MeasurementBasis],
) -> Result<Vec<Vec<Cell>>> {
    task.bases
        .iter()
        .zip(bob_bases)
        .map(|(alice, bob)| {
            measure(&task.initial_state, alice)?
                .into_iter()
                .map(|branch| {
                    let out = task.channel.propagate(&branch.post_state, task.dwell_time)?;
                    Ok(Cell { outcome: branch.outcome, p_alice: branch.probability, bob_mean: expectation(&out, bob) })
                })
                .collect()
        })
        .collect()
}

fn exact_terms(cells: &[Vec<Cell>]) -> Vec<f64> {
    cells.iter().map(|row| row.iter().map(|c| c.p_alice * c.bob_mean * c.bob_mean).sum()).collect()
}

/// S_N by exact density-matrix propagation.
pub fn steering_exact<C: QubitChannel>(task: &SteeringTask<C>) -> Result<SteeringEstimate> {
    let cells = conditional_cells(task, &task.bases)?;
    Ok(SteeringEstimate::exact(exact_terms(&cells)))
}

/// As [`steering_exact`], but Bob's settings are rotated by `rotation_angle`
/// about the Bloch ŷ axis relative to Alice's.
pub fn steering_exact_misaligned<C: QubitChannel>(
    task: &SteeringTask<C>,
    rotation_angle: f64,
) -> Result<SteeringEstimate> {
    let bob: Vec<MeasurementBasis> = task.bases.iter().map(|b| b.rotated_about_y(rotation_angle)).collect();
    let cells = conditional_cells(task, &bob)?;
    Ok(SteeringEstimate::exact(exact_terms(&cells)))
}

/// Shot generator for one measurement setting.
///
/// Shot `k` consumes the four 32-bit words at positions [4k, 4k + 4) of
/// ChaCha stream `basis_index` keyed by `seed`, so each shot is a pure
/// function of (seed, basis index, shot index).
fn shot_rng(seed: u64, basis_index: usize, first_shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(basis_index as u64);
    rng.set_word_pos(4 * u128::from(first_shot));
    rng
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct CellTally {
    count: u64,
    /// Σ b over the shots in the cell, b = ±1.
    bob_sum: i64,
}

/// Plug-in term Σ_a P̂(a) m̂_a² and its delta-method variance.
fn sampled_term(tallies: &[CellTally; 2], shots: u64) -> (f64, f64, Vec<Outcome>) {
    let n = shots as f64;
    let mut term = 0.0;
    let mut var = 0.0;
    let mut empty = Vec::new();
    let mut means = [0.0; 2];
    for outcome in Outcome::BOTH {
        let tally = tallies[outcome.index()];
        if tally.count == 0 {
            empty.push(outcome);
            continue;
        }
        let n_a = tally.count as f64;
        let p_hat = n_a / n;
        let m = tally.bob_sum as f64 / n_a;
        means[outcome.index()] = m;
        term += p_hat * m * m;
        // ∂term/∂m̂_a = 2P̂_a m̂_a, Var(m̂_a) = (1 − m̂_a²)/n_a
        var += (2.0 * p_hat * m).powi(2) * (1.0 - m * m).max(0.0) / n_a;
    }
    if empty.is_empty() {
        // ∂term/∂P̂₊ = m̂₊² − m̂₋², Var(P̂₊) = P̂₊(1 − P̂₊)/n
        let p_plus = tallies[0].count as f64 / n;
        var += (means[0].powi(2) - means[1].powi(2)).powi(2) * p_plus * (1.0 - p_plus) / n;
    }
    (term, var, empty)
}

/// Sample `shots` rounds for one setting, starting at shot index `first`.
fn run_shots(cells: &[Cell], seed: u64, basis_index: usize, first: u64, shots: u64) -> [CellTally; 2] {
    let p_plus = cells.iter().find(|c| c.outcome == Outcome::Plus).map_or(0.0, |c| c.p_alice);
    let mut bob_plus = [0.5; 2];
    for c in cells {
        bob_plus[c.outcome.index()] = 0.5 * (1.0 + c.bob_mean);
    }
    let mut rng = shot_rng(seed, basis_index, first);
    let mut tallies = [CellTally::default(); 2];
    for _ in 0..shots {
        let (u_alice, u_bob) = draw_pair(&mut rng);
        let a = if u_alice < p_plus { Outcome::Plus } else { Outcome::Minus };
        let b = if u_bob < bob_plus[a.index()] { 1 } else { -1 };
        let tally = &mut tallies[a.index()];
        tally.count += 1;
        tally.bob_sum += b;
    }
    tallies
}

fn draw_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    let a: f64 = rng.random();
    let b: f64 = rng.random();
    (a, b)
}

/// Finite-shot estimate of S_N.
///
/// The estimator squares conditional sample means, so it is biased upward
/// by O(1/shots); `stderr` comes from first-order error propagation.
pub fn steering_sampled<C: QubitChannel>(
    task: &SteeringTask<C>,
    shots_per_basis: u64,
    seed: u64,
) -> Result<SteeringEstimate> {
    if shots_per_basis < MIN_SHOTS {
        return Err(Error::InvalidParameter {
            name: "shots_per_basis",
            reason: format!("must be at least {MIN_SHOTS}, got {shots_per_basis}"),
        });
    }
    let cells = conditional_cells(task, &task.bases)?;
    let mut per_basis_terms = Vec::with_capacity(cells.len());
    let mut variance = 0.0;
    let mut empty_cells = Vec::new();
    for (basis_index, row) in cells.iter().enumerate() {
        let tallies = run_shots(row, seed, basis_index, 0, shots_per_basis);
        let (term, var, empty) = sampled_term(&tallies, shots_per_basis);
        per_basis_terms.push(term);
        variance += var;
        empty_cells.extend(empty.into_iter().map(|outcome| EmptyCell { basis_index, outcome }));
    }
    Ok(SteeringEstimate {
        s: per_basis_terms.iter().sum(),
        per_basis_terms,
        mode: EstimateMode::Sampled,
        shots_per_basis,
        stderr: variance.sqrt(),
        empty_cells,
    })
}

/// S_2 = 1 + e^(−2γt) for pure dephasing of a maximally mixed input.
pub fn dephasing_s_closed_form(gamma: f64, t: f64) -> f64 {
    1.0 + (-2.0 * gamma * t).exp()
}

/// S_2 = [5 + 2cos(2Jt) + cos(4Jt)]/4 for exchange coupling to a |↓⟩ ancilla.
pub fn coupling_s_closed_form(j: f64, t: f64) -> f64 {
    let x = j * t;
    0.25 * (5.0 + 2.0 * (2.0 * x).cos() + (4.0 * x).cos())
}

/// One member λ of a local-hidden-state ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenStateComponent {
    /// q_λ
    pub weight: f64,
    /// P_λ(A_i = +1) for each setting i.
    pub alice_plus: Vec<f64>,
    /// σ_λ, the state Bob receives.
    pub bob_state: DensityMatrix,
}

/// A local-hidden-state model: Bob's state does not depend on Alice's choice.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenStateEnsemble {
    components: Vec<HiddenStateComponent>,
}

impl HiddenStateEnsemble {
    pub fn new(components: Vec<HiddenStateComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter { name: "components", reason: "ensemble is empty".into() });
        }
        let n_settings = components[0].alice_plus.len();
        let mut total = 0.0;
        for c in &components {
            if !(0.0..=1.0).contains(&c.weight) {
                return Err(Error::InvalidParameter { name: "weight", reason: format!("{} not in [0, 1]", c.weight) });
            }
            if c.alice_plus.len() != n_settings {
                return Err(Error::InvalidParameter {
                    name: "alice_plus",
                    reason: "components disagree on the number of settings".into(),
                });
            }
            if let Some(p) = c.alice_plus.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidParameter { name: "alice_plus", reason: format!("{p} not in [0, 1]") });
            }
            if c.bob_state.dim() != 2 {
                return Err(Error::InvalidDimension { expected: "2", found: c.bob_state.dim() });
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter { name: "weight", reason: format!("weights sum to {total}") });
        }
        Ok(Self { components })
    }

    /// Random ensemble with 1..=`max_components` members, uniform Alice
    /// marginals and Bob states drawn uniformly from the Bloch ball.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_components: usize, n_settings: usize) -> Self {
        let k = rng.random_range(1..=max_components.max(1));
        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let components = raw
            .iter()
            .map(|w| HiddenStateComponent {
                weight: w / total,
                alice_plus: (0..n_settings).map(|_| rng.random()).collect(),
                bob_state: DensityMatrix::from_bloch(random_bloch_in_ball(rng)).expect("inside unit ball"),
            })
            .collect();
        Self { components }
    }

    pub fn components(&self) -> &[HiddenStateComponent] {
        &self.components
    }

    pub fn n_settings(&self) -> usize {
        self.components[0].alice_plus.len()
    }
}

fn random_bloch_in_ball<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let r: [f64; 3] = [0; 3].map(|_| 2.0 * rng.random::<f64>() - 1.0);
        if r.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            return r;
        }
    }
}

/// S_N produced by a local-hidden-state ensemble.
///
/// P(A_i = a) = Σ_λ q_λ P_λ(a) and
/// ⟨B_i⟩_a = Σ_λ q_λ P_λ(a) Tr[(Π₊ − Π₋)σ_λ] / P(A_i = a). Cells with
/// P(A_i = a) = 0 contribute nothing.
pub fn hidden_state_s(ensemble: &HiddenStateEnsemble, bases: &[MeasurementBasis]) -> Result<f64> {
    if bases.len() != ensemble.n_settings() {
        return Err(Error::InvalidParameter {
            name: "bases",
            reason: format!("ensemble has {} settings, {} bases given", ensemble.n_settings(), bases.len()),
        });
    }
    let mut s = 0.0;
    for (i, basis) in bases.iter().enumerate() {
        for outcome in Outcome::BOTH {
            let mut p_a = 0.0;
            let mut weighted = 0.0;
            for c in &ensemble.components {
                let p = match outcome {
                    Outcome::Plus => c.alice_plus[i],
                    Outcome::Minus => 1.0 - c.alice_plus[i],
                };
                p_a += c.weight * p;
                weighted += c.weight * p * expectation(&c.bob_state, basis);
            }
            if p_a > 0.0 {
                let mean = weighted / p_a;
                s += p_a * mean * mean;
            }
        }
    }
    Ok(s)
}
