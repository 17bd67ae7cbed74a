//! Multi-photon state algebra on labeled optical modes.
//!
//! States are linear combinations of product terms of photons, where each
//! photon carries a mode label (spatial path + polarization) and a Gaussian
//! temporal wavepacket. Inner products between terms are matrix permanents of
//! single-photon overlaps, so bosonic interference and partial
//! distinguishability fall out of the algebra rather than being modeled
//! separately.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default magnitude below which amplitudes are dropped during
/// canonicalization.
pub const PRUNE_EPS: f64 = 1e-12;

/// Polarization basis states. Analyzer directions at general angles are
/// represented as angles in the detection layer, not here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => write!(f, "H"),
            Polarization::V => write!(f, "V"),
        }
    }
}

/// One optical mode: a spatial path plus a polarization. Distinct labels are
/// orthogonal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeLabel {
    pub path: String,
    pub pol: Polarization,
}

impl ModeLabel {
    pub fn new(path: impl Into<String>, pol: Polarization) -> Self {
        ModeLabel {
            path: path.into(),
            pol,
        }
    }

    pub fn h(path: impl Into<String>) -> Self {
        Self::new(path, Polarization::H)
    }

    pub fn v(path: impl Into<String>) -> Self {
        Self::new(path, Polarization::V)
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.pol, self.path)
    }
}

/// Gaussian temporal amplitude, `psi(t) ~ exp(-(t - center)^2 / (4 sigma^2))`,
/// with `sigma` the standard deviation of the intensity profile. Times are in
/// femtoseconds. The amplitude is real: delays enter observables only through
/// envelope overlap (no carrier-phase term).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavePacket {
    center: f64,
    sigma: f64,
}

impl WavePacket {
    pub fn new(center_fs: f64, sigma_fs: f64) -> Result<Self> {
        if !sigma_fs.is_finite() || sigma_fs <= 0.0 {
            return Err(Error::invalid(
                "sigma_fs",
                format!("packet width must be positive and finite, got {sigma_fs}"),
            ));
        }
        if !center_fs.is_finite() {
            return Err(Error::invalid("center_fs", "packet center must be finite"));
        }
        Ok(WavePacket {
            center: center_fs,
            sigma: sigma_fs,
        })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Same packet with the center shifted by `dt` femtoseconds.
    pub fn shifted(&self, dt: f64) -> Self {
        WavePacket {
            center: self.center + dt,
            sigma: self.sigma,
        }
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.center
            .total_cmp(&other.center)
            .then(self.sigma.total_cmp(&other.sigma))
    }
}

/// Overlap integral of two normalized Gaussian amplitudes,
/// `sqrt(2 s1 s2 / (s1^2 + s2^2)) * exp(-(c1 - c2)^2 / (4 (s1^2 + s2^2)))`.
/// Real under the no-carrier convention; magnitude <= 1 with equality iff
/// the packets coincide (for equal widths, exactly when centers coincide).
pub fn wavepacket_overlap(w1: &WavePacket, w2: &WavePacket) -> f64 {
    if w1 == w2 {
        return 1.0;
    }
    let s2 = w1.sigma * w1.sigma + w2.sigma * w2.sigma;
    let d = w1.center - w2.center;
    (2.0 * w1.sigma * w2.sigma / s2).sqrt() * (-d * d / (4.0 * s2)).exp()
}

/// One photon: a mode, a temporal packet, and an optional bookkeeping origin
/// tag (e.g. which down-conversion pair it came from). Origin tags never enter
/// overlap computations.
#[derive(Debug, Clone, PartialEq)]
pub struct Photon {
    pub mode: ModeLabel,
    pub packet: WavePacket,
    pub origin: Option<String>,
}

impl Photon {
    pub fn new(mode: ModeLabel, packet: WavePacket) -> Self {
        Photon {
            mode,
            packet,
            origin: None,
        }
    }

    pub fn tagged(mode: ModeLabel, packet: WavePacket, origin: impl Into<String>) -> Self {
        Photon {
            mode,
            packet,
            origin: Some(origin.into()),
        }
    }

    /// Canonical total order: (spatial label, polarization, packet center,
    /// packet width, origin).
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.mode
            .cmp(&other.mode)
            .then_with(|| self.packet.cmp_key(&other.packet))
            .then_with(|| self.origin.cmp(&other.origin))
    }
}

/// Overlap of two single-photon states: mode delta times wavepacket overlap.
/// Origin tags are ignored.
pub fn single_photon_overlap(p1: &Photon, p2: &Photon) -> f64 {
    if p1.mode == p2.mode {
        wavepacket_overlap(&p1.packet, &p2.packet)
    } else {
        0.0
    }
}

/// A complex-weighted product of photons. Photons are kept in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct KetTerm {
    pub amplitude: Complex64,
    photons: Vec<Photon>,
}

impl KetTerm {
    pub fn new(amplitude: Complex64, mut photons: Vec<Photon>) -> Self {
        photons.sort_by(Photon::cmp_key);
        KetTerm { amplitude, photons }
    }

    /// Vacuum term with the given amplitude.
    pub fn scalar(amplitude: Complex64) -> Self {
        KetTerm {
            amplitude,
            photons: Vec::new(),
        }
    }

    pub fn photons(&self) -> &[Photon] {
        &self.photons
    }

    fn photons_cmp(&self, other: &Self) -> Ordering {
        let n = self.photons.len().cmp(&other.photons.len());
        if n != Ordering::Equal {
            return n;
        }
        for (a, b) in self.photons.iter().zip(&other.photons) {
            let c = a.cmp_key(b);
            if c != Ordering::Equal {
                return c;
            }
        }
        Ordering::Equal
    }
}

/// Inner product of two terms: zero when photon counts differ, otherwise
/// `conj(a1) * a2 * perm(G)` with `G[i][j]` the single-photon overlap between
/// photon `i` of the bra and photon `j` of the ket.
pub fn term_inner_product(t1: &KetTerm, t2: &KetTerm) -> Complex64 {
    if t1.photons.len() != t2.photons.len() {
        return Complex64::new(0.0, 0.0);
    }
    let n = t1.photons.len();
    let base = t1.amplitude.conj() * t2.amplitude;
    if n == 0 {
        return base;
    }
    let gram: Vec<Vec<Complex64>> = t1
        .photons
        .iter()
        .map(|p| {
            t2.photons
                .iter()
                .map(|q| Complex64::new(single_photon_overlap(p, q), 0.0))
                .collect()
        })
        .collect();
    base * permanent(&gram).expect("gram matrix is square")
}

/// A linear combination of product terms, kept in canonical form (sorted,
/// duplicate photon lists merged, tiny amplitudes pruned).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateVector {
    terms: Vec<KetTerm>,
}

impl StateVector {
    pub fn new(terms: Vec<KetTerm>) -> Self {
        canonicalize_terms(terms, PRUNE_EPS)
    }

    /// The empty (zero) state.
    pub fn zero() -> Self {
        StateVector { terms: Vec::new() }
    }

    pub fn terms(&self) -> &[KetTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        StateVector::new(
            self.terms
                .iter()
                .map(|t| KetTerm {
                    amplitude: t.amplitude * factor,
                    photons: t.photons.clone(),
                })
                .collect(),
        )
    }

    pub fn add(&self, other: &StateVector) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        StateVector::new(terms)
    }

    /// Tensor product: concatenates photon lists termwise.
    pub fn tensor(&self, other: &StateVector) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut photons = a.photons.clone();
                photons.extend(b.photons.iter().cloned());
                terms.push(KetTerm::new(a.amplitude * b.amplitude, photons));
            }
        }
        StateVector::new(terms)
    }

    pub fn norm_squared(&self) -> f64 {
        state_inner_product(self, self).re
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().max(0.0).sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_squared() - 1.0).abs() <= tol
    }

    /// Same state with all origin tags cleared; terms that differed only by
    /// bookkeeping tags merge. Tags never affect overlaps, so this changes
    /// the representation, not the physics.
    pub fn without_origin_tags(&self) -> Self {
        StateVector::new(
            self.terms
                .iter()
                .map(|t| {
                    KetTerm::new(
                        t.amplitude,
                        t.photons
                            .iter()
                            .map(|p| Photon::new(p.mode.clone(), p.packet))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= PRUNE_EPS {
            return Err(Error::invalid("state", "cannot normalize a zero state"));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }
}

/// Bilinear extension of [`term_inner_product`], conjugate-linear in the
/// first argument.
pub fn state_inner_product(s1: &StateVector, s2: &StateVector) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for t1 in &s1.terms {
        for t2 in &s2.terms {
            acc += term_inner_product(t1, t2);
        }
    }
    acc
}

/// Canonical form: photons sorted within terms, terms sorted, duplicate
/// photon lists merged by amplitude addition, amplitudes below `prune_eps`
/// removed. Idempotent.
pub fn canonicalize(s: &StateVector, prune_eps: f64) -> StateVector {
    canonicalize_terms(s.terms.clone(), prune_eps)
}

fn canonicalize_terms(mut terms: Vec<KetTerm>, prune_eps: f64) -> StateVector {
    for t in &mut terms {
        t.photons.sort_by(Photon::cmp_key);
    }
    terms.sort_by(|a, b| a.photons_cmp(b));
    let mut merged: Vec<KetTerm> = Vec::with_capacity(terms.len());
    for t in terms {
        match merged.last_mut() {
            Some(last) if last.photons_cmp(&t) == Ordering::Equal => {
                last.amplitude += t.amplitude;
            }
            _ => merged.push(t),
        }
    }
    merged.retain(|t| t.amplitude.norm() >= prune_eps);
    StateVector { terms: merged }
}

/// Matrix permanent. Direct expansion for n <= 4, Ryser inclusion-exclusion
/// above that. Intended for n <= 8 (at most triple pairs plus margin).
pub fn permanent(m: &[Vec<Complex64>]) -> Result<Complex64> {
    let n = m.len();
    for row in m {
        if row.len() != n {
            return Err(Error::invalid(
                "matrix",
                format!("expected square matrix, row has {} of {} columns", row.len(), n),
            ));
        }
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if n <= 4 {
        Ok(perm_direct(m, 0, 0))
    } else {
        Ok(perm_ryser(m))
    }
}

/// Expansion along rows with a used-column bitmask.
fn perm_direct(m: &[Vec<Complex64>], row: usize, used: u32) -> Complex64 {
    let n = m.len();
    if row == n {
        return Complex64::new(1.0, 0.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for col in 0..n {
        if used & (1 << col) == 0 {
            let a = m[row][col];
            if a.re != 0.0 || a.im != 0.0 {
                acc += a * perm_direct(m, row + 1, used | (1 << col));
            }
        }
    }
    acc
}

/// Ryser: perm(M) = (-1)^n sum_{S != 0} (-1)^|S| prod_i sum_{j in S} m_ij.
fn perm_ryser(m: &[Vec<Complex64>]) -> Complex64 {
    let n = m.len();
    let mut total = Complex64::new(0.0, 0.0);
    for subset in 1u32..(1 << n) {
        let mut prod = Complex64::new(1.0, 0.0);
        for row in m {
            let mut rowsum = Complex64::new(0.0, 0.0);
            for (j, v) in row.iter().enumerate() {
                if subset & (1 << j) != 0 {
                    rowsum += v;
                }
            }
            prod *= rowsum;
        }
        if (subset.count_ones() as usize + n).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// Occupation counts per spatial path (ignores polarization).
pub fn path_occupations(term: &KetTerm) -> BTreeMap<&str, usize> {
    let mut occ = BTreeMap::new();
    for p in term.photons() {
        *occ.entry(p.mode.path.as_str()).or_insert(0) += 1;
    }
    occ
}
