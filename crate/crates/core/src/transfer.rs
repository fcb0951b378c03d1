//! Sender → receiver transfer of a qudit encoded in the lowest `d` levels of
//! the sender spin.
//!
//! The chain starts in `Σ_μ α_μ |μ⟩_s |0…0⟩_bus |0⟩_r`, evolves under the
//! exact Hamiltonian and is traced down to the receiver. Before comparing with
//! the sent state the receiver is conjugated by the deterministic corrections
//! `diag((−1)^{μκ} e^{ihμτ})`, undoing the swap phase and the Zeeman phase.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::{ChainSpace, GlobalPureState, OccupationVector};
use crate::config::ChainConfig;
use crate::effective::{phase_gate_diagonal, resonant_mode};
use crate::error::{ChainError, Result};
use crate::propagator::Propagator;

const NORM_TOL: f64 = 1e-12;

/// Qudit amplitudes `α_0 … α_{d−1}`, unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditAmplitudes(DVector<Complex64>);

impl QuditAmplitudes {
    pub fn new(alpha: DVector<Complex64>) -> Result<Self> {
        let norm = alpha.norm_squared();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(ChainError::Domain(format!("qudit amplitudes have squared norm {norm}")));
        }
        if alpha.len() < 2 {
            return Err(ChainError::Domain("a qudit needs at least two levels".into()));
        }
        Ok(Self(alpha))
    }

    pub fn from_slice(alpha: &[Complex64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(alpha))
    }

    /// Normalizes an arbitrary non-zero vector.
    pub fn normalized(alpha: DVector<Complex64>) -> Result<Self> {
        let norm = alpha.norm();
        if norm == 0.0 {
            return Err(ChainError::Domain("cannot normalize the zero vector".into()));
        }
        Self::new(alpha / Complex64::new(norm, 0.0))
    }

    /// `(1, 1, …, 1)/√d`.
    pub fn uniform(d: usize) -> Self {
        let a = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        Self(DVector::from_element(d, a))
    }

    /// The basis state `|μ⟩`.
    pub fn basis(d: usize, mu: usize) -> Result<Self> {
        if mu >= d {
            return Err(ChainError::Range(format!("level {mu} outside a {d}-level qudit")));
        }
        let mut v = DVector::zeros(d);
        v[mu] = Complex64::new(1.0, 0.0);
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn get(&self, mu: usize) -> Complex64 {
        self.0[mu]
    }
}

/// A `d × d` receiver density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditDensity(DMatrix<Complex64>);

impl QuditDensity {
    /// Validates hermiticity, unit trace and positivity to `1e−10`.
    pub fn new(rho: DMatrix<Complex64>) -> Result<Self> {
        const TOL: f64 = 1e-10;
        if !rho.is_square() {
            return Err(ChainError::Domain("density matrix must be square".into()));
        }
        if (&rho - rho.adjoint()).camax() > TOL {
            return Err(ChainError::Domain("density matrix is not Hermitian".into()));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(ChainError::Domain(format!("density matrix has trace {tr}")));
        }
        let min_eig = rho.clone().symmetric_eigenvalues().min();
        if min_eig < -TOL {
            return Err(ChainError::Domain(format!("density matrix has eigenvalue {min_eig}")));
        }
        Ok(Self(rho))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `⟨φ|ρ|φ⟩`.
    pub fn fidelity(&self, alpha: &QuditAmplitudes) -> f64 {
        overlap(&self.0, alpha)
    }
}

/// `⟨φ|ρ|φ⟩` using the leading `dim(φ)` block of `rho`, clamped to `[0, 1]`.
pub(crate) fn overlap(rho: &DMatrix<Complex64>, alpha: &QuditAmplitudes) -> f64 {
    let a = alpha.as_vector();
    let d = a.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for mu in 0..d {
        for nu in 0..d {
            acc += a[mu].conj() * rho[(mu, nu)] * a[nu];
        }
    }
    acc.re.clamp(0.0, 1.0)
}

/// Which deterministic receiver corrections to apply before the overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corrections {
    /// `diag((−1)^{μκ})`; needs odd `N`.
    pub phase_gate: bool,
    /// `diag(e^{ihμτ})`, undoing the Zeeman phase.
    pub field_phase: bool,
}

impl Default for Corrections {
    fn default() -> Self {
        Self {
            phase_gate: true,
            field_phase: true,
        }
    }
}

impl Corrections {
    pub const NONE: Self = Self {
        phase_gate: false,
        field_phase: false,
    };

    /// Diagonal of the receiver correction for the first `levels` levels.
    pub fn diagonal(&self, config: &ChainConfig, tau: f64, levels: usize) -> Result<Vec<Complex64>> {
        let signs = if self.phase_gate {
            phase_gate_diagonal(resonant_mode(config)?, levels)
        } else {
            vec![1.0; levels]
        };
        Ok(signs
            .into_iter()
            .enumerate()
            .map(|(mu, s)| {
                let phase = if self.field_phase { config.field_h * mu as f64 * tau } else { 0.0 };
                Complex64::from_polar(s, phase)
            })
            .collect())
    }
}

/// `D ρ D†` for diagonal `D`.
pub(crate) fn conjugate_diagonal(rho: &DMatrix<Complex64>, diag: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(rho.nrows(), rho.ncols(), |i, j| diag[i] * rho[(i, j)] * diag[j].conj())
}

/// Partial trace over every site except the receiver.
///
/// Each chain basis vector is split into its receiver occupation and the
/// occupations of the remaining sites (the "environment key"). A state becomes
/// a `keys × levels` matrix `M`, and `tr_env |a⟩⟨b| = Maᵀ conj(Mb)`.
#[derive(Debug, Clone)]
pub struct ReceiverTrace {
    receiver: usize,
    n_keys: usize,
    max_level: usize,
    /// `slots[sector][i] = (key, receiver level)` for basis vector `i`.
    slots: BTreeMap<usize, Vec<(usize, usize)>>,
}

impl ReceiverTrace {
    pub fn new(space: &ChainSpace) -> Self {
        let receiver = space.config().receiver();
        let mut keys: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        for basis in space.sectors() {
            for s in basis.states() {
                let mut key = s.as_slice().to_vec();
                key.remove(receiver);
                let next = keys.len();
                keys.entry(key).or_insert(next);
            }
        }
        let mut max_level = 0;
        let slots = space
            .sectors()
            .iter()
            .map(|basis| {
                let v = basis
                    .states()
                    .iter()
                    .map(|s| {
                        let mut key = s.as_slice().to_vec();
                        let level = key.remove(receiver) as usize;
                        max_level = max_level.max(level);
                        (keys[&key], level)
                    })
                    .collect();
                (basis.sector(), v)
            })
            .collect();
        Self {
            receiver,
            n_keys: keys.len(),
            max_level,
            slots,
        }
    }

    pub fn receiver_site(&self) -> usize {
        self.receiver
    }

    /// Number of receiver levels that can be occupied in the space.
    pub fn levels(&self) -> usize {
        self.max_level + 1
    }

    /// `keys × levels` amplitude matrix; receiver levels `≥ levels` are dropped.
    pub fn split(&self, state: &GlobalPureState, levels: usize) -> Result<DMatrix<Complex64>> {
        let mut m = DMatrix::zeros(self.n_keys, levels);
        for (n, amps) in state.sectors() {
            let slots = self
                .slots
                .get(&n)
                .ok_or_else(|| ChainError::Config(format!("sector {n} not in this space")))?;
            if slots.len() != amps.len() {
                return Err(ChainError::Config(format!("sector {n} amplitude length mismatch")));
            }
            for (&(key, level), amp) in slots.iter().zip(amps.iter()) {
                if level < levels {
                    m[(key, level)] += *amp;
                }
            }
        }
        Ok(m)
    }

    /// `tr_env(|a⟩⟨b|)` on the first `levels` receiver levels.
    pub fn cross(&self, a: &GlobalPureState, b: &GlobalPureState, levels: usize) -> Result<DMatrix<Complex64>> {
        let ma = self.split(a, levels)?;
        let mb = self.split(b, levels)?;
        Ok(ma.transpose() * mb.conjugate())
    }

    /// Reduced receiver density of a pure state over the first `levels` levels.
    pub fn density(&self, state: &GlobalPureState, levels: usize) -> Result<DMatrix<Complex64>> {
        self.cross(state, state, levels)
    }
}

/// The linear map `α ↦ ρ_r(α)` at a fixed time, stored as the `d²` blocks
/// `R^{ab} = D tr_env(U|a⟩⟨b|U†) D†` so that `ρ_r = Σ α_a α_b* R^{ab}`.
#[derive(Debug, Clone)]
pub struct ReceiverChannel {
    d: usize,
    blocks: Vec<DMatrix<Complex64>>,
}

impl ReceiverChannel {
    pub fn from_blocks(d: usize, blocks: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if blocks.len() != d * d || blocks.iter().any(|b| b.nrows() != d || b.ncols() != d) {
            return Err(ChainError::Config(format!("a {d}-level channel needs {} blocks of {d}x{d}", d * d)));
        }
        Ok(Self { d, blocks })
    }

    /// Builds the channel from the evolved images of the basis inputs.
    pub fn from_images(trace: &ReceiverTrace, images: &[GlobalPureState], correction: &[Complex64]) -> Result<Self> {
        let d = images.len();
        let levels = d;
        let mats = images
            .iter()
            .map(|psi| trace.split(psi, levels))
            .collect::<Result<Vec<_>>>()?;
        let mut blocks = Vec::with_capacity(d * d);
        for ma in &mats {
            for mb in &mats {
                let raw = ma.transpose() * mb.conjugate();
                blocks.push(conjugate_diagonal(&raw, correction));
            }
        }
        Ok(Self { d, blocks })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `R^{ab}`.
    pub fn block(&self, a: usize, b: usize) -> &DMatrix<Complex64> {
        &self.blocks[a * self.d + b]
    }

    pub fn apply(&self, alpha: &QuditAmplitudes) -> DMatrix<Complex64> {
        let mut rho = DMatrix::zeros(self.d, self.d);
        for a in 0..self.d {
            for b in 0..self.d {
                let w = alpha.get(a) * alpha.get(b).conj();
                if w != Complex64::new(0.0, 0.0) {
                    rho += self.block(a, b) * w;
                }
            }
        }
        rho
    }

    pub fn fidelity(&self, alpha: &QuditAmplitudes) -> f64 {
        overlap(&self.apply(alpha), alpha)
    }

    /// Exact average of `⟨φ|ρ_r(φ)|φ⟩` over Haar-random `φ`.
    ///
    /// The fidelity is the quartic form `Σ α_μ* α_ν α_a α_b* R^{ab}_{μν}` and
    /// `E[α_a α_b* α_ν α_μ*] = (δ_ab δ_μν + δ_aμ δ_bν) / (d(d+1))`.
    pub fn haar_average(&self) -> f64 {
        let d = self.d;
        let mut first = Complex64::new(0.0, 0.0);
        let mut second = Complex64::new(0.0, 0.0);
        for a in 0..d {
            first += self.block(a, a).trace();
            for b in 0..d {
                second += self.block(a, b)[(a, b)];
            }
        }
        ((first + second).re / (d * (d + 1)) as f64).clamp(0.0, 1.0)
    }
}

/// Exact transfer dynamics for one configuration, with spectra cached.
#[derive(Debug, Clone)]
pub struct TransferSimulator {
    space: ChainSpace,
    propagator: Propagator,
    trace: ReceiverTrace,
}

impl TransferSimulator {
    pub fn new(config: &ChainConfig) -> Result<Self> {
        if config.excitation_cap + 1 < config.qudit_dim {
            return Err(ChainError::Domain(format!(
                "excitation cap {} cannot hold a {}-level qudit",
                config.excitation_cap, config.qudit_dim
            )));
        }
        let space = ChainSpace::new(config)?;
        let propagator = Propagator::for_space(&space)?;
        let trace = ReceiverTrace::new(&space);
        Ok(Self {
            space,
            propagator,
            trace,
        })
    }

    pub fn config(&self) -> &ChainConfig {
        self.space.config()
    }

    pub fn space(&self) -> &ChainSpace {
        &self.space
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn trace(&self) -> &ReceiverTrace {
        &self.trace
    }

    /// Chain state with the sender in `|μ⟩` and everything else empty.
    pub fn sender_basis_state(&self, mu: usize) -> Result<GlobalPureState> {
        let mut occ = vec![0u8; self.config().n_sites()];
        occ[self.config().sender()] = u8::try_from(mu).map_err(|_| ChainError::Range(format!("level {mu}")))?;
        self.space.product_state(&OccupationVector::new(occ))
    }

    /// `Σ_μ α_μ |μ⟩_s |0…0⟩ |0⟩_r`, `μ = 0..d`.
    pub fn initial_state(&self, alpha: &QuditAmplitudes) -> Result<GlobalPureState> {
        if alpha.dim() != self.config().qudit_dim {
            return Err(ChainError::Domain(format!(
                "expected {} amplitudes, got {}",
                self.config().qudit_dim,
                alpha.dim()
            )));
        }
        let mut psi = GlobalPureState::default();
        for mu in 0..alpha.dim() {
            let a = alpha.get(mu);
            if a != Complex64::new(0.0, 0.0) {
                psi.add_scaled(a, &self.sender_basis_state(mu)?);
            }
        }
        Ok(psi)
    }

    pub fn evolve(&self, state: &GlobalPureState, tau: f64) -> Result<GlobalPureState> {
        self.propagator.evolve(state, tau)
    }

    /// Full reduced receiver density over every reachable level.
    pub fn receiver_density(&self, state: &GlobalPureState) -> Result<DMatrix<Complex64>> {
        self.trace.density(state, self.trace.levels())
    }

    /// Receiver density on the qudit levels.
    pub fn reduce_to_receiver(&self, state: &GlobalPureState) -> Result<QuditDensity> {
        QuditDensity::new(self.trace.density(state, self.config().qudit_dim)?)
    }

    /// `⟨φ|D ρ_r(τ) D†|φ⟩`.
    pub fn corrected_fidelity(&self, alpha: &QuditAmplitudes, tau: f64, corrections: Corrections) -> Result<f64> {
        check_time(tau)?;
        let d = self.config().qudit_dim;
        let diag = corrections.diagonal(self.config(), tau, d)?;
        let psi = self.evolve(&self.initial_state(alpha)?, tau)?;
        let rho = conjugate_diagonal(&self.trace.density(&psi, d)?, &diag);
        Ok(overlap(&rho, alpha))
    }

    /// The corrected receiver channel at time `tau`.
    pub fn channel(&self, tau: f64, corrections: Corrections) -> Result<ReceiverChannel> {
        check_time(tau)?;
        let d = self.config().qudit_dim;
        let diag = corrections.diagonal(self.config(), tau, d)?;
        let images = (0..d)
            .map(|mu| self.evolve(&self.sender_basis_state(mu)?, tau))
            .collect::<Result<Vec<_>>>()?;
        ReceiverChannel::from_images(&self.trace, &images, &diag)
    }

    /// `⟨0…0 μ|U(τ)|μ 0…0⟩`, the amplitude for a basis level to arrive intact.
    pub fn basis_transfer_amplitude(&self, mu: usize, tau: f64) -> Result<Complex64> {
        let out = self.evolve(&self.sender_basis_state(mu)?, tau)?;
        let mut occ = vec![0u8; self.config().n_sites()];
        occ[self.config().receiver()] = mu as u8;
        out.amplitude(&self.space, &OccupationVector::new(occ))
    }
}

pub(crate) fn check_time(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(ChainError::Domain(format!("evolution time must be finite and non-negative, got {tau}")));
    }
    Ok(())
}

/// Initial chain state for transferring `alpha`.
pub fn initial_transfer_state(config: &ChainConfig, alpha: &QuditAmplitudes) -> Result<GlobalPureState> {
    if alpha.dim() != config.qudit_dim {
        return Err(ChainError::Domain(format!("expected {} amplitudes", config.qudit_dim)));
    }
    let space = ChainSpace::new(config)?;
    let mut psi = GlobalPureState::default();
    for mu in 0..alpha.dim() {
        let mut occ = vec![0u8; config.n_sites()];
        occ[config.sender()] = mu as u8;
        psi.add_scaled(alpha.get(mu), &space.product_state(&OccupationVector::new(occ))?);
    }
    Ok(psi)
}

/// Receiver qudit density of a chain state.
pub fn reduce_to_receiver(config: &ChainConfig, state: &GlobalPureState) -> Result<QuditDensity> {
    let space = ChainSpace::new(config)?;
    QuditDensity::new(ReceiverTrace::new(&space).density(state, config.qudit_dim)?)
}

/// One-shot fidelity; builds and diagonalizes the chain each call.
pub fn corrected_fidelity(
    config: &ChainConfig,
    alpha: &QuditAmplitudes,
    tau: f64,
    corrections: Corrections,
) -> Result<f64> {
    TransferSimulator::new(config)?.corrected_fidelity(alpha, tau, corrections)
}
