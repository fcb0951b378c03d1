//! Excitation-sector bases in the occupation-number picture.
//!
//! Site `i` carries `n_i = S - m_i` excitations above the fully polarized
//! level, so `0 <= n_i <= 2S`. The XX Hamiltonian conserves the total
//! excitation number, which splits the Hilbert space into independent sectors.
//! Chain states are stored as one amplitude vector per sector.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::config::ChainConfig;
use crate::error::{ChainError, Result};

/// Per-site excitation numbers in site order (sender, bus 1..N, receiver).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationVector(Vec<u8>);

impl OccupationVector {
    pub fn new(occupations: Vec<u8>) -> Self {
        Self(occupations)
    }

    pub fn zeros(n_sites: usize) -> Self {
        Self(vec![0; n_sites])
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, site: usize) -> u8 {
        self.0[site]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    /// Copy with one excitation moved from `from` to `to`.
    pub(crate) fn hopped(&self, from: usize, to: usize) -> Self {
        let mut v = self.0.clone();
        v[from] -= 1;
        v[to] += 1;
        Self(v)
    }
}

impl From<Vec<u8>> for OccupationVector {
    fn from(v: Vec<u8>) -> Self {
        Self(v)
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

/// All occupation vectors with a fixed total excitation and per-site cap `2S`.
///
/// States are ordered lexicographically with the sender as the most
/// significant site, largest occupation first: for one excitation on three
/// sites the order is `(1,0,0), (0,1,0), (0,0,1)`.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    sector: usize,
    n_sites: usize,
    twice_spin: u32,
    states: Vec<OccupationVector>,
    index: HashMap<OccupationVector, usize>,
}

impl SectorBasis {
    /// Enumerate sector `total` over `n_sites` sites. Returns an empty basis
    /// when the sector cannot be filled.
    pub fn enumerate(n_sites: usize, twice_spin: u32, total: usize) -> Self {
        let cap = twice_spin as usize;
        let mut states = Vec::new();
        let mut current = vec![0u8; n_sites];
        fill(&mut current, 0, total, cap, &mut states);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self {
            sector: total,
            n_sites,
            twice_spin,
            states,
            index,
        }
    }

    pub fn sector(&self) -> usize {
        self.sector
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn twice_spin(&self) -> u32 {
        self.twice_spin
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[OccupationVector] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &OccupationVector {
        &self.states[i]
    }

    pub fn index_of(&self, occupation: &OccupationVector) -> Option<usize> {
        self.index.get(occupation).copied()
    }
}

fn fill(current: &mut Vec<u8>, site: usize, remaining: usize, cap: usize, out: &mut Vec<OccupationVector>) {
    let sites_left = current.len() - site;
    if sites_left == 0 {
        if remaining == 0 {
            out.push(OccupationVector(current.clone()));
        }
        return;
    }
    // the sites after this one can absorb at most (sites_left - 1) * cap
    let rest_capacity = (sites_left - 1) * cap;
    let hi = remaining.min(cap);
    let lo = remaining.saturating_sub(rest_capacity);
    for n in (lo..=hi).rev() {
        current[site] = n as u8;
        fill(current, site + 1, remaining - n, cap, out);
    }
    current[site] = 0;
}

/// Number of occupation vectors with the given total, without enumerating them.
pub fn sector_dimension(n_sites: usize, twice_spin: u32, total: usize) -> usize {
    let cap = twice_spin as usize;
    // ways[t] = vectors over the sites processed so far with total t
    let mut ways = vec![0usize; total + 1];
    ways[0] = 1;
    for _ in 0..n_sites {
        let mut next = vec![0usize; total + 1];
        for (t, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for n in 0..=cap.min(total - t) {
                next[t + n] += w;
            }
        }
        ways = next;
    }
    ways[total]
}

/// Sector basis of the full chain (`N + 2` sites).
pub fn enumerate_sector(config: &ChainConfig, n: usize) -> Result<SectorBasis> {
    let limit = config.excitation_cap.min(config.max_excitation());
    if n > limit {
        return Err(ChainError::Range(format!(
            "sector {n} exceeds the excitation cap {limit}"
        )));
    }
    Ok(SectorBasis::enumerate(config.n_sites(), config.twice_spin, n))
}

/// The chain's truncated Hilbert space: every sector from 0 up to the cap.
#[derive(Debug, Clone)]
pub struct ChainSpace {
    config: ChainConfig,
    sectors: Vec<SectorBasis>,
}

impl ChainSpace {
    pub fn new(config: &ChainConfig) -> Result<Self> {
        config.validate()?;
        let sectors = (0..=config.excitation_cap)
            .map(|n| enumerate_sector(config, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: config.clone(),
            sectors,
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn max_sector(&self) -> usize {
        self.sectors.len() - 1
    }

    pub fn basis(&self, n: usize) -> Result<&SectorBasis> {
        self.sectors.get(n).ok_or_else(|| {
            ChainError::Range(format!("sector {n} exceeds the excitation cap {}", self.max_sector()))
        })
    }

    pub fn sectors(&self) -> &[SectorBasis] {
        &self.sectors
    }

    /// Total dimension of the retained space.
    pub fn dim(&self) -> usize {
        self.sectors.iter().map(SectorBasis::len).sum()
    }

    /// Unit-norm state with all weight on one occupation vector.
    pub fn product_state(&self, occupation: &OccupationVector) -> Result<GlobalPureState> {
        let n = self.locate(occupation)?;
        let basis = &self.sectors[n];
        let idx = basis.index_of(occupation).expect("capped vector lies in its sector");
        let mut amps = DVector::zeros(basis.len());
        amps[idx] = Complex64::new(1.0, 0.0);
        let mut state = GlobalPureState::default();
        state.sectors.insert(n, amps);
        Ok(state)
    }

    /// Sector of a valid occupation vector.
    pub(crate) fn locate(&self, occupation: &OccupationVector) -> Result<usize> {
        if occupation.len() != self.config.n_sites() {
            return Err(ChainError::Domain(format!(
                "occupation vector {occupation} has {} sites, expected {}",
                occupation.len(),
                self.config.n_sites()
            )));
        }
        if occupation.as_slice().iter().any(|&n| n as u32 > self.config.twice_spin) {
            return Err(ChainError::Domain(format!(
                "occupation vector {occupation} exceeds the per-site cap 2S = {}",
                self.config.twice_spin
            )));
        }
        let n = occupation.total();
        if n > self.max_sector() {
            return Err(ChainError::Domain(format!(
                "occupation vector {occupation} lies above the excitation cap {}",
                self.max_sector()
            )));
        }
        Ok(n)
    }
}

/// Product state of the chain with all weight on `occupation`.
pub fn product_state(config: &ChainConfig, occupation: &OccupationVector) -> Result<GlobalPureState> {
    ChainSpace::new(config)?.product_state(occupation)
}

/// A pure chain state stored as a direct sum of sector amplitude vectors.
///
/// Sectors absent from the map carry zero amplitude.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GlobalPureState {
    sectors: BTreeMap<usize, DVector<Complex64>>,
}

impl GlobalPureState {
    pub fn from_sectors(sectors: BTreeMap<usize, DVector<Complex64>>) -> Self {
        Self { sectors }
    }

    pub fn sector(&self, n: usize) -> Option<&DVector<Complex64>> {
        self.sectors.get(&n)
    }

    pub fn sectors(&self) -> impl Iterator<Item = (usize, &DVector<Complex64>)> {
        self.sectors.iter().map(|(&n, v)| (n, v))
    }

    /// Sectors carrying non-zero amplitude.
    pub fn occupied_sectors(&self) -> Vec<usize> {
        self.sectors
            .iter()
            .filter(|(_, v)| v.iter().any(|z| *z != Complex64::new(0.0, 0.0)))
            .map(|(&n, _)| n)
            .collect()
    }

    pub fn norm_squared(&self) -> f64 {
        self.sectors.values().map(|v| v.norm_squared()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.sectors
            .iter()
            .filter_map(|(n, a)| other.sectors.get(n).map(|b| a.dotc(b)))
            .sum()
    }

    /// Amplitude on `occupation`, zero when the sector is empty.
    pub fn amplitude(&self, space: &ChainSpace, occupation: &OccupationVector) -> Result<Complex64> {
        let n = space.locate(occupation)?;
        let idx = space.basis(n)?.index_of(occupation).expect("valid occupation");
        Ok(self
            .sectors
            .get(&n)
            .map(|v| v[idx])
            .unwrap_or_else(|| Complex64::new(0.0, 0.0)))
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        for v in self.sectors.values_mut() {
            *v *= factor;
        }
        self
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: Complex64, other: &Self) {
        for (&n, v) in &other.sectors {
            match self.sectors.get_mut(&n) {
                Some(existing) => existing.axpy(factor, v, Complex64::new(1.0, 0.0)),
                None => {
                    self.sectors.insert(n, v * factor);
                }
            }
        }
    }
}
