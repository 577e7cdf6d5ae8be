//! Configuration basis of an N-atom chain.
//!
//! Every atom is either in its ground state `g` or in the Rydberg state `r`, so
//! the Hilbert space is spanned by 2^N product configurations. A configuration
//! is an N-bit mask where bit `j` (0-based) set means site `j + 1` is excited.
//! Sites are numbered 1..=N from left to right; all public site arguments use
//! this 1-based numbering.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest chain the basis can index (2^24 amplitudes is ~256 MiB).
pub const MAX_SITES: usize = 24;

/// Chain geometry and van der Waals strength.
///
/// Energies are in units of 2π·MHz and lengths in μm; `c6` therefore carries
/// units of 2π·MHz·μm^6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub n_sites: usize,
    pub lattice_constant: f64,
    pub c6: f64,
    /// Largest |i - j| that still interacts. `None` keeps the full 1/x^6 tail.
    #[serde(default)]
    pub interaction_cutoff: Option<usize>,
}

impl LatticeSpec {
    pub fn new(n_sites: usize, lattice_constant: f64, c6: f64) -> Result<Self> {
        let spec = Self {
            n_sites,
            lattice_constant,
            c6,
            interaction_cutoff: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Chain with 5 μm spacing and a nearest-neighbour shift of 2π·53 MHz.
    pub fn standard(n_sites: usize) -> Result<Self> {
        Self::with_nearest_neighbor(n_sites, 5.0, 53.0)
    }

    /// Chain whose C6 is chosen so that U(a) equals `nearest_neighbor`.
    pub fn with_nearest_neighbor(n_sites: usize, lattice_constant: f64, nearest_neighbor: f64) -> Result<Self> {
        Self::new(n_sites, lattice_constant, nearest_neighbor * lattice_constant.powi(6))
    }

    pub fn with_cutoff(mut self, cutoff: Option<usize>) -> Result<Self> {
        self.interaction_cutoff = cutoff;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 || self.n_sites > MAX_SITES {
            return domain(format!("n_sites must lie in 1..={MAX_SITES}, got {}", self.n_sites));
        }
        if !(self.lattice_constant > 0.0 && self.lattice_constant.is_finite()) {
            return domain(format!("lattice_constant must be positive, got {}", self.lattice_constant));
        }
        if !(self.c6 > 0.0 && self.c6.is_finite()) {
            return domain(format!("c6 must be positive, got {}", self.c6));
        }
        if self.interaction_cutoff == Some(0) {
            return domain("interaction_cutoff must be at least 1 when given");
        }
        Ok(())
    }

    /// Hilbert-space dimension 2^N.
    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    /// Total chain length l = a(N - 1).
    pub fn length(&self) -> f64 {
        self.lattice_constant * (self.n_sites as f64 - 1.0)
    }

    /// U(a) = C6 / a^6.
    pub fn nearest_neighbor(&self) -> f64 {
        self.coupling_at(1)
    }

    /// Interaction between two excitations `distance` lattice sites apart,
    /// honouring the cutoff. `distance` must be positive.
    pub fn coupling_at(&self, distance: usize) -> f64 {
        debug_assert!(distance > 0);
        match self.interaction_cutoff {
            Some(cut) if distance > cut => 0.0,
            _ => self.c6 / (self.lattice_constant * distance as f64).powi(6),
        }
    }

    /// U(i, j) for 1-based sites `i < j`.
    pub fn pair_interaction(&self, i: usize, j: usize) -> Result<f64> {
        if i == 0 || j > self.n_sites || i >= j {
            return domain(format!("pair ({i}, {j}) invalid: need 1 <= i < j <= {}", self.n_sites));
        }
        Ok(self.coupling_at(j - i))
    }

    /// Interaction energy Σ_{i<j excited} U_ij of a configuration.
    pub fn interaction_energy(&self, config: Configuration) -> f64 {
        let sites: Vec<usize> = config.sites0().collect();
        let mut total = 0.0;
        for (idx, &a) in sites.iter().enumerate() {
            for &b in &sites[idx + 1..] {
                total += self.coupling_at(b - a);
            }
        }
        total
    }

    fn check_count(&self, n: usize) -> Result<()> {
        if n > self.n_sites {
            return domain(format!("excitation count {n} exceeds n_sites = {}", self.n_sites));
        }
        Ok(())
    }
}

/// A product configuration of the chain, stored as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Configuration(pub u32);

impl Configuration {
    pub const EMPTY: Configuration = Configuration(0);

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Every site excited.
    pub fn full(n_sites: usize) -> Self {
        Configuration(((1u64 << n_sites) - 1) as u32)
    }

    /// Build from 1-based excited sites.
    pub fn from_sites(n_sites: usize, sites: &[usize]) -> Result<Self> {
        let mut bits = 0u32;
        for &s in sites {
            if s == 0 || s > n_sites {
                return domain(format!("site {s} outside 1..={n_sites}"));
            }
            if bits & (1 << (s - 1)) != 0 {
                return domain(format!("site {s} listed twice"));
            }
            bits |= 1 << (s - 1);
        }
        Ok(Configuration(bits))
    }

    pub fn excitation_count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_excited(self, site: usize) -> bool {
        site >= 1 && self.0 & (1 << (site - 1)) != 0
    }

    /// Excited sites, 1-based, ascending.
    pub fn sites(self) -> impl Iterator<Item = usize> {
        self.sites0().map(|s| s + 1)
    }

    fn sites0(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |j| bits & (1 << j) != 0)
    }

    /// Mirror image under site j -> N + 1 - j.
    pub fn reflect(self, n_sites: usize) -> Self {
        Configuration(self.0.reverse_bits() >> (32 - n_sites))
    }

    /// `g`/`r` string with site 1 leftmost.
    pub fn to_bitstring(self, n_sites: usize) -> String {
        (0..n_sites).map(|j| if self.0 & (1 << j) != 0 { 'r' } else { 'g' }).collect()
    }

    pub fn parse_bitstring(s: &str) -> Result<Self> {
        if s.len() > MAX_SITES {
            return domain(format!("bitstring longer than {MAX_SITES} sites"));
        }
        let mut bits = 0u32;
        for (j, ch) in s.chars().enumerate() {
            match ch {
                'r' => bits |= 1 << j,
                'g' => {}
                other => return domain(format!("invalid site state '{other}' in \"{s}\"")),
            }
        }
        Ok(Configuration(bits))
    }

    /// Alternating pattern r g r g ... r, the target for odd chains.
    pub fn antiferromagnetic(n_sites: usize) -> Self {
        Configuration((0..n_sites).step_by(2).fold(0, |acc, j| acc | (1 << j)))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sites: Vec<String> = self.sites().map(|s| s.to_string()).collect();
        write!(f, "{{{}}}", sites.join(","))
    }
}

/// All configurations with exactly `n` excitations, ascending by bit mask.
pub fn enumerate_subspace(spec: &LatticeSpec, n: usize) -> Result<Vec<Configuration>> {
    spec.check_count(n)?;
    let n_sites = spec.n_sites;
    if n == 0 {
        return Ok(vec![Configuration::EMPTY]);
    }
    // Gosper's hack walks n-bit-set masks in increasing order.
    let limit = 1u64 << n_sites;
    let mut out = Vec::with_capacity(binomial(n_sites, n));
    let mut x: u64 = (1u64 << n) - 1;
    while x < limit {
        out.push(Configuration(x as u32));
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    Ok(out)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Normalized state over the configuration basis, labelled by time in μs.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    pub time: f64,
}

/// Norm tolerance applied when states are constructed or checked.
pub const NORM_TOLERANCE: f64 = 1e-9;

impl StateVector {
    /// Wrap amplitudes that are already normalized.
    pub fn new(amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        check_dimension(amplitudes.len())?;
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return domain(format!("state norm {norm} deviates from 1"));
        }
        Ok(Self { amplitudes, time })
    }

    /// Wrap and rescale to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        check_dimension(amplitudes.len())?;
        let norm = norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return domain("cannot normalize a zero or non-finite vector");
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { amplitudes, time })
    }

    /// Amplitudes without any norm check. Callers own the invariant.
    pub(crate) fn from_raw(amplitudes: Vec<Complex64>, time: f64) -> Self {
        Self { amplitudes, time }
    }

    pub fn basis(n_sites: usize, config: Configuration) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_sites];
        amplitudes[config.index()] = Complex64::new(1.0, 0.0);
        Self { amplitudes, time: 0.0 }
    }

    pub fn ground(n_sites: usize) -> Self {
        Self::basis(n_sites, Configuration::EMPTY)
    }

    pub fn n_sites(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn amplitude(&self, config: Configuration) -> Complex64 {
        self.amplitudes[config.index()]
    }

    pub fn population(&self, config: Configuration) -> f64 {
        self.amplitude(config).norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }
}

fn check_dimension(len: usize) -> Result<()> {
    if len == 0 || !len.is_power_of_two() || len > 1 << MAX_SITES {
        return domain(format!("state length {len} is not 2^N with 0 <= N <= {MAX_SITES}"));
    }
    Ok(())
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// (1/√N) Σ_j |1_j⟩.
pub fn symmetric_single_excitation(spec: &LatticeSpec) -> StateVector {
    let n = spec.n_sites;
    let weight = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); spec.dim()];
    for j in 0..n {
        amplitudes[1 << j] = weight;
    }
    StateVector::from_raw(amplitudes, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> LatticeSpec {
        LatticeSpec::standard(n).unwrap()
    }

    #[test]
    fn subspace_sizes() {
        let spec = chain(7);
        assert_eq!(enumerate_subspace(&spec, 0).unwrap(), vec![Configuration(0)]);
        assert_eq!(enumerate_subspace(&spec, 7).unwrap(), vec![Configuration(0b1111111)]);
        let two = enumerate_subspace(&spec, 2).unwrap();
        assert_eq!(two.len(), 21);
        assert!(two.windows(2).all(|w| w[0] < w[1]));
        assert!(two.iter().all(|c| c.excitation_count() == 2));
        assert!(enumerate_subspace(&spec, 8).is_err());
    }

    #[test]
    fn subspaces_partition_the_space() {
        for n_sites in 1..=10 {
            let spec = chain(n_sites);
            let mut all: Vec<u32> = (0..=n_sites)
                .flat_map(|n| enumerate_subspace(&spec, n).unwrap())
                .map(|c| c.bits())
                .collect();
            all.sort_unstable();
            let expected: Vec<u32> = (0..spec.dim() as u32).collect();
            assert_eq!(all, expected);
        }
    }

    #[test]
    fn pair_interaction_values() {
        let spec = chain(7);
        assert!((spec.pair_interaction(1, 2).unwrap() - 53.0).abs() < 1e-12);
        assert!((spec.pair_interaction(1, 3).unwrap() - 53.0 / 64.0).abs() < 1e-12);
        assert!((spec.pair_interaction(3, 4).unwrap() - 53.0).abs() < 1e-12);
        assert!(spec.pair_interaction(2, 2).is_err());
        assert!(spec.pair_interaction(3, 1).is_err());
        assert!(spec.pair_interaction(0, 1).is_err());
        assert!(spec.pair_interaction(6, 8).is_err());
    }

    #[test]
    fn pair_interaction_mirror_and_monotone() {
        let spec = chain(9);
        for i in 1..=9 {
            for j in i + 1..=9 {
                let u = spec.pair_interaction(i, j).unwrap();
                let mirrored = spec.pair_interaction(10 - j, 10 - i).unwrap();
                assert_eq!(u, mirrored);
            }
        }
        for d in 1..8 {
            assert!(spec.coupling_at(d) > spec.coupling_at(d + 1));
        }
    }

    #[test]
    fn cutoff_removes_distant_pairs() {
        let spec = chain(7).with_cutoff(Some(2)).unwrap();
        assert!(spec.pair_interaction(1, 3).unwrap() > 0.0);
        assert_eq!(spec.pair_interaction(1, 4).unwrap(), 0.0);
        assert!(chain(7).with_cutoff(Some(0)).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(LatticeSpec::new(0, 5.0, 1.0).is_err());
        assert!(LatticeSpec::new(3, 0.0, 1.0).is_err());
        assert!(LatticeSpec::new(3, 5.0, -1.0).is_err());
        assert!(LatticeSpec::new(MAX_SITES + 1, 5.0, 1.0).is_err());
    }

    #[test]
    fn symmetric_single_excitation_amplitudes() {
        let one = symmetric_single_excitation(&chain(1));
        assert_eq!(one.amplitude(Configuration(1)), Complex64::new(1.0, 0.0));

        let four = symmetric_single_excitation(&chain(4));
        for j in 0..4 {
            assert!((four.amplitude(Configuration(1 << j)).re - 0.5).abs() < 1e-15);
        }
        assert!((four.norm() - 1.0).abs() < 1e-12);

        let seven = symmetric_single_excitation(&chain(7));
        let expected = 1.0 / 7f64.sqrt();
        let nonzero: Vec<_> = seven.amplitudes().iter().filter(|a| a.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 7);
        assert!(nonzero.iter().all(|a| (a.re - expected).abs() < 1e-15));
    }

    #[test]
    fn bitstrings() {
        let c = Configuration::from_sites(7, &[1, 3, 5, 7]).unwrap();
        assert_eq!(c.to_bitstring(7), "rgrgrgr");
        assert_eq!(c, Configuration::antiferromagnetic(7));
        assert_eq!(
            Configuration::parse_bitstring("rgggggr").unwrap(),
            Configuration::from_sites(7, &[1, 7]).unwrap()
        );
        assert!(Configuration::parse_bitstring("rgx").is_err());
        assert_eq!(c.to_string(), "{1,3,5,7}");
    }

    #[test]
    fn reflection() {
        let c = Configuration::from_sites(7, &[1, 2]).unwrap();
        assert_eq!(c.reflect(7), Configuration::from_sites(7, &[6, 7]).unwrap());
        assert_eq!(Configuration::antiferromagnetic(9).reflect(9), Configuration::antiferromagnetic(9));
    }

    #[test]
    fn state_vector_norm_enforced() {
        let bad = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(StateVector::new(bad.clone(), 0.0).is_err());
        let ok = StateVector::normalized(bad, 0.0).unwrap();
        assert!((ok.norm() - 1.0).abs() < 1e-15);
        assert!(StateVector::normalized(vec![Complex64::new(0.0, 0.0); 3], 0.0).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(7, 2), 21);
        assert_eq!(binomial(15, 8), 6435);
        assert_eq!(binomial(3, 4), 0);
    }
}
