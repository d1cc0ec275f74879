//! Tight-binding lattices: Hamiltonians, disorder and band structure.
//!
//! Sites of an H-CROW are stored interleaved, `(a₁, b₁, a₂, b₂, …)`, so the
//! real-space Hamiltonian is banded with half-bandwidth 3. A regular CROW is a
//! single chain with half-bandwidth 1. Frequencies are detunings from the
//! resonance of an isolated ring, so a clean Hamiltonian has a zero diagonal.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::seed;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    /// Two legs with complex intra-leg hopping; two sites per unit cell.
    #[serde(rename = "hcrow")]
    HCrow,
    /// Single chain with uniform real hopping.
    RegularCrow,
}

impl LatticeKind {
    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::HCrow => "hcrow",
            LatticeKind::RegularCrow => "regular-crow",
        }
    }

    pub fn sites_per_cell(self) -> usize {
        match self {
            LatticeKind::HCrow => 2,
            LatticeKind::RegularCrow => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Circulation {
    Ccw,
    Cw,
}

/// Which sites of the edge cells couple to the external leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingFootprint {
    /// Every site of the drive cell and of the readout cell has its own lead.
    #[default]
    EdgeCell,
    /// Only the driven site and the read-out site have leads.
    DriveReadout,
}

/// Sublattice of a ring site. Regular CROW sites are reported as `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

/// Static description of a lattice instance. Rates are in units of `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    /// Unit cells for an H-CROW, sites for a regular CROW.
    pub num_cells: usize,
    pub hopping: f64,
    pub kappa_ex: f64,
    pub kappa_in: f64,
    pub disorder_std: f64,
    pub footprint: CouplingFootprint,
    /// The drive couples to cell `1 + port_offset` and the readout to cell
    /// `L - port_offset` (one-based).
    pub port_offset: usize,
}

impl LatticeSpec {
    /// H-CROW with `num_cells` unit cells and the reference parameters
    /// `κ_ex = 0.5J`, `κ_in = 0.1J`, `U = 0.8J`.
    pub fn hcrow(num_cells: usize) -> Self {
        LatticeSpec {
            kind: LatticeKind::HCrow,
            num_cells,
            hopping: 1.0,
            kappa_ex: 0.5,
            kappa_in: 0.1,
            disorder_std: 0.8,
            footprint: CouplingFootprint::EdgeCell,
            port_offset: 0,
        }
    }

    /// Regular CROW with `num_sites` rings and the same reference parameters.
    pub fn regular_crow(num_sites: usize) -> Self {
        LatticeSpec {
            kind: LatticeKind::RegularCrow,
            num_cells: num_sites,
            ..LatticeSpec::hcrow(num_sites)
        }
    }

    pub fn with_kind(self, kind: LatticeKind) -> Self {
        LatticeSpec { kind, ..self }
    }

    pub fn with_num_cells(self, num_cells: usize) -> Self {
        LatticeSpec { num_cells, ..self }
    }

    pub fn with_hopping(self, hopping: f64) -> Self {
        LatticeSpec { hopping, ..self }
    }

    pub fn with_kappa_ex(self, kappa_ex: f64) -> Self {
        LatticeSpec { kappa_ex, ..self }
    }

    pub fn with_kappa_in(self, kappa_in: f64) -> Self {
        LatticeSpec { kappa_in, ..self }
    }

    pub fn with_disorder_std(self, disorder_std: f64) -> Self {
        LatticeSpec {
            disorder_std,
            ..self
        }
    }

    pub fn with_footprint(self, footprint: CouplingFootprint) -> Self {
        LatticeSpec { footprint, ..self }
    }

    pub fn with_port_offset(self, port_offset: usize) -> Self {
        LatticeSpec {
            port_offset,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_cells == 0 {
            return Err(Error::invalid("num_cells", "must be at least 1"));
        }
        if !(self.hopping.is_finite() && self.hopping > 0.0) {
            return Err(Error::invalid("hopping", format!("must be finite and > 0, got {}", self.hopping)));
        }
        for (field, v) in [
            ("kappa_ex", self.kappa_ex),
            ("kappa_in", self.kappa_in),
            ("disorder_std", self.disorder_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        if 2 * self.port_offset >= self.num_cells {
            return Err(Error::invalid(
                "port_offset",
                format!(
                    "drive cell {} must not lie beyond readout cell {}",
                    self.port_offset + 1,
                    self.num_cells - self.port_offset
                ),
            ));
        }
        Ok(())
    }

    /// Number of ring sites (matrix dimension).
    pub fn dim(&self) -> usize {
        self.num_cells * self.kind.sites_per_cell()
    }

    /// Half-bandwidth of the Hamiltonian in the interleaved ordering.
    pub fn bandwidth(&self) -> usize {
        match self.kind {
            LatticeKind::HCrow => 3,
            LatticeKind::RegularCrow => 1,
        }
    }

    /// Matrix index of a site in zero-based `cell`.
    pub fn site(&self, cell: usize, sub: Sublattice) -> usize {
        match (self.kind, sub) {
            (LatticeKind::RegularCrow, _) => cell,
            (LatticeKind::HCrow, Sublattice::A) => 2 * cell,
            (LatticeKind::HCrow, Sublattice::B) => 2 * cell + 1,
        }
    }

    /// Inverse of [`LatticeSpec::site`].
    pub fn cell_of(&self, index: usize) -> (usize, Sublattice) {
        match self.kind {
            LatticeKind::RegularCrow => (index, Sublattice::A),
            LatticeKind::HCrow if index % 2 == 0 => (index / 2, Sublattice::A),
            LatticeKind::HCrow => (index / 2, Sublattice::B),
        }
    }
}

/// One hopping term `amplitude · c†_{n,from} c_{n+offset,to}` of the
/// counter-clockwise Hamiltonian. Hermitian partners are implied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub from: Sublattice,
    pub to: Sublattice,
    pub offset: isize,
    pub amplitude: Complex64,
}

/// Hopping terms of a unit cell, each listed once (partners implied).
pub fn hops(kind: LatticeKind, hopping: f64) -> Vec<Hop> {
    use Sublattice::{A, B};
    let j = Complex64::new(hopping, 0.0);
    let hop = |from, to, offset, amplitude| Hop {
        from,
        to,
        offset,
        amplitude,
    };
    match kind {
        LatticeKind::HCrow => vec![
            // a†_n a_{n+1}: +iJ (its partner a†_{n+1} a_n carries −iJ)
            hop(A, A, 1, I * j),
            // b†_n b_{n+1}: −iJ
            hop(B, B, 1, -I * j),
            // a†_n b_n: 2J
            hop(A, B, 0, 2.0 * j),
            // a†_n b_{n±1}: J
            hop(A, B, 1, j),
            hop(A, B, -1, j),
        ],
        LatticeKind::RegularCrow => vec![hop(A, A, 1, j)],
    }
}

/// One sampled vector of on-site detunings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub seed: u64,
    pub detunings: Vec<f64>,
}

/// Draws `dim` i.i.d. `N(0, U²)` detunings from the ChaCha8 stream keyed by
/// `seed`. `U = 0` yields the zero vector.
pub fn sample_disorder(spec: &LatticeSpec, seed: u64) -> DisorderRealization {
    let dim = spec.dim();
    let detunings = if spec.disorder_std == 0.0 {
        vec![0.0; dim]
    } else {
        let normal = Normal::new(0.0, spec.disorder_std).expect("validated std");
        let mut rng = seed::rng_from_seed(seed);
        (0..dim).map(|_| normal.sample(&mut rng)).collect()
    };
    DisorderRealization { seed, detunings }
}

/// Complex Hermitian matrix stored by diagonals within its half-bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    dim: usize,
    bandwidth: usize,
    circulation: Circulation,
    /// Row-major band storage: entry `(i, j)` lives at
    /// `i * (2 * bandwidth + 1) + (j + bandwidth - i)`.
    band: Vec<Complex64>,
}

impl Hamiltonian {
    fn zeros(dim: usize, bandwidth: usize, circulation: Circulation) -> Self {
        Hamiltonian {
            dim,
            bandwidth,
            circulation,
            band: vec![Complex64::new(0.0, 0.0); dim * (2 * bandwidth + 1)],
        }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let bw = self.bandwidth;
        (i < self.dim && j < self.dim && i.abs_diff(j) <= bw).then(|| i * (2 * bw + 1) + (j + bw - i))
    }

    fn add(&mut self, i: usize, j: usize, value: Complex64) {
        let s = self.slot(i, j).expect("hop outside band");
        self.band[s] += value;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn circulation(&self) -> Circulation {
        self.circulation
    }

    /// Matrix element `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.slot(i, j)
            .map(|s| self.band[s])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Largest `|H_ij - conj(H_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i.saturating_sub(self.bandwidth)..(i + self.bandwidth + 1).min(self.dim) {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }
}

/// Real-space Hamiltonian with open boundaries. `Cw` is the complex conjugate
/// of `Ccw`; disorder adds the same detunings to both.
pub fn build_hamiltonian(
    spec: &LatticeSpec,
    circulation: Circulation,
    disorder: Option<&DisorderRealization>,
) -> Result<Hamiltonian> {
    spec.validate()?;
    let dim = spec.dim();
    if let Some(d) = disorder {
        if d.detunings.len() != dim {
            return Err(Error::SizeMismatch {
                expected: dim,
                actual: d.detunings.len(),
            });
        }
    }

    let mut h = Hamiltonian::zeros(dim, spec.bandwidth(), circulation);
    let cells = spec.num_cells as isize;
    for hop in hops(spec.kind, spec.hopping) {
        let amplitude = match circulation {
            Circulation::Ccw => hop.amplitude,
            Circulation::Cw => hop.amplitude.conj(),
        };
        for n in 0..cells {
            let m = n + hop.offset;
            if !(0..cells).contains(&m) {
                continue;
            }
            let i = spec.site(n as usize, hop.from);
            let j = spec.site(m as usize, hop.to);
            h.add(i, j, amplitude);
            h.add(j, i, amplitude.conj());
        }
    }
    if let Some(d) = disorder {
        for (i, &v) in d.detunings.iter().enumerate() {
            h.add(i, i, Complex64::new(v, 0.0));
        }
    }
    Ok(h)
}

/// 2×2 Bloch matrix `Σ_δ h(δ) e^{ikδ}` assembled from the real-space hops.
pub fn bloch_matrix(spec: &LatticeSpec, circulation: Circulation, k: f64) -> Matrix2<Complex64> {
    let idx = |s: Sublattice| match s {
        Sublattice::A => 0,
        Sublattice::B => 1,
    };
    let mut m = Matrix2::zeros();
    for hop in hops(LatticeKind::HCrow, spec.hopping) {
        let amplitude = match circulation {
            Circulation::Ccw => hop.amplitude,
            Circulation::Cw => hop.amplitude.conj(),
        };
        let phase = Complex64::from_polar(1.0, k * hop.offset as f64);
        let (i, j) = (idx(hop.from), idx(hop.to));
        m[(i, j)] += amplitude * phase;
        m[(j, i)] += (amplitude * phase).conj();
    }
    m
}

/// Bloch matrix of both circulations at momentum `k`, in the basis
/// `(ccw↑, ccw↓, cw↑, cw↓)` where ↑ is the a-sublattice.
pub fn combined_bloch_matrix(spec: &LatticeSpec, k: f64) -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0)
        .copy_from(&bloch_matrix(spec, Circulation::Ccw, k));
    // The conjugated real-space hops map k to −k in the Bloch picture.
    m.fixed_view_mut::<2, 2>(2, 2)
        .copy_from(&bloch_matrix(spec, Circulation::Cw, k));
    m
}

/// Largest pseudospin-flipping (off-diagonal) element of the combined Bloch
/// matrix at `k = π + Δk`. It vanishes to first order in `Δk`.
pub fn linearization_defect(spec: &LatticeSpec, delta_k: f64) -> Result<f64> {
    if spec.kind != LatticeKind::HCrow {
        return Err(Error::invalid("kind", "linearization defect is defined for H-CROW only"));
    }
    if !(delta_k.abs() <= 0.5) {
        return Err(Error::invalid("delta_k", format!("|delta_k| must be <= 0.5, got {delta_k}")));
    }
    let m = combined_bloch_matrix(spec, PI + delta_k);
    let mut worst = 0.0_f64;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    Ok(worst)
}

/// Band energies and group velocities at one momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub k: f64,
    pub omega_plus: f64,
    pub omega_minus: Option<f64>,
    pub v_plus: f64,
    pub v_minus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub kind: LatticeKind,
    pub k_grid: Vec<f64>,
    /// Upper H-CROW band, or the single regular-CROW band `2J cos k`.
    pub omega_plus: Vec<f64>,
    /// Lower H-CROW band; `None` for a regular CROW.
    pub omega_minus: Option<Vec<f64>>,
    pub v_plus: Vec<f64>,
    pub v_minus: Option<Vec<f64>>,
}

/// Closed-form bands at momentum `k`.
///
/// For the H-CROW, `ω±(k) = ±2√2 J √(1 + cos k) = ±4J |cos(k/2)|`. The two
/// bands touch at `k = π`; there the velocities are taken from the
/// pseudospin-locked branches, `v± = ±2J`.
pub fn band_point(spec: &LatticeSpec, k: f64) -> BandPoint {
    let j = spec.hopping;
    match spec.kind {
        LatticeKind::HCrow => {
            let omega = 2.0 * 2f64.sqrt() * j * (1.0 + k.cos()).max(0.0).sqrt();
            let half = (k / 2.0).cos();
            let v = if half.abs() < 1e-12 {
                2.0 * j
            } else {
                -2.0 * j * (k / 2.0).sin() * half.signum()
            };
            BandPoint {
                k,
                omega_plus: omega,
                omega_minus: Some(-omega),
                v_plus: v,
                v_minus: Some(-v),
            }
        }
        LatticeKind::RegularCrow => BandPoint {
            k,
            omega_plus: 2.0 * j * k.cos(),
            omega_minus: None,
            v_plus: -2.0 * j * k.sin(),
            v_minus: None,
        },
    }
}

/// Bands on the closed grid `k_m = 2πm / (k_points − 1)` over `[0, 2π]`.
/// An odd `k_points` puts a grid point exactly on the crossing `k = π`.
pub fn band_structure(spec: &LatticeSpec, k_points: usize) -> Result<BandStructure> {
    spec.validate()?;
    if k_points < 2 {
        return Err(Error::invalid("k_points", format!("need at least 2, got {k_points}")));
    }
    let last = (k_points - 1) as f64;
    let k_grid: Vec<f64> = (0..k_points).map(|m| PI * (2 * m) as f64 / last).collect();
    let points: Vec<BandPoint> = k_grid.iter().map(|&k| band_point(spec, k)).collect();
    let two_band = spec.kind == LatticeKind::HCrow;
    Ok(BandStructure {
        kind: spec.kind,
        omega_plus: points.iter().map(|p| p.omega_plus).collect(),
        omega_minus: two_band.then(|| points.iter().filter_map(|p| p.omega_minus).collect()),
        v_plus: points.iter().map(|p| p.v_plus).collect(),
        v_minus: two_band.then(|| points.iter().filter_map(|p| p.v_minus).collect()),
        k_grid,
    })
}

/// Eigenvalues of the Bloch matrix in ascending order, from a numerical
/// Hermitian eigensolver.
pub fn numerical_bands(spec: &LatticeSpec, circulation: Circulation, k: f64) -> [f64; 2] {
    let ev = bloch_matrix(spec, circulation, k).symmetric_eigenvalues();
    let (lo, hi) = if ev[0] <= ev[1] { (ev[0], ev[1]) } else { (ev[1], ev[0]) };
    [lo, hi]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hcrow_two_cells_matches_hand_written_matrix() {
        let spec = LatticeSpec::hcrow(2).with_disorder_std(0.0);
        let h = build_hamiltonian(&spec, Circulation::Ccw, None).unwrap();
        let (a1, b1, a2, b2) = (0, 1, 2, 3);
        assert_eq!(h.get(a1, b1), c(2.0, 0.0));
        assert_eq!(h.get(a1, b2), c(1.0, 0.0));
        assert_eq!(h.get(a2, b1), c(1.0, 0.0));
        assert_eq!(h.get(a2, b2), c(2.0, 0.0));
        assert_eq!(h.get(a1, a2), c(0.0, 1.0));
        assert_eq!(h.get(a2, a1), c(0.0, -1.0));
        assert_eq!(h.get(b1, b2), c(0.0, -1.0));
        assert_eq!(h.get(b2, b1), c(0.0, 1.0));
        assert_eq!(h.get(b1, a1), c(2.0, 0.0));
        assert_eq!(h.get(b2, a1), c(1.0, 0.0));
        for i in 0..4 {
            assert_eq!(h.get(i, i), c(0.0, 0.0));
        }
        assert_eq!(h.hermiticity_defect(), 0.0);
    }

    #[test]
    fn regular_crow_is_real_tridiagonal() {
        let spec = LatticeSpec::regular_crow(3).with_disorder_std(0.0);
        let h = build_hamiltonian(&spec, Circulation::Ccw, None).unwrap();
        let dense = h.to_dense();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
                c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0),
                c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
            ],
        );
        assert_eq!(dense, expected);
        assert_eq!(h.bandwidth(), 1);
    }

    #[test]
    fn disordered_diagonal_equals_direct_resampling() {
        let spec = LatticeSpec::hcrow(10).with_disorder_std(0.8);
        let d = sample_disorder(&spec, 1);
        let h = build_hamiltonian(&spec, Circulation::Ccw, Some(&d)).unwrap();
        let clean = build_hamiltonian(&spec, Circulation::Ccw, None).unwrap();

        // Independent draw with the same generator and key.
        let mut rng = seed::rng_from_seed(1);
        let normal = Normal::new(0.0, 0.8).unwrap();
        let direct: Vec<f64> = (0..20).map(|_| normal.sample(&mut rng)).collect();

        for i in 0..20 {
            assert_eq!(h.get(i, i).re, direct[i]);
            assert_eq!(h.get(i, i).im, 0.0);
            for j in 0..20 {
                if i != j {
                    assert_eq!(h.get(i, j), clean.get(i, j));
                }
            }
        }
    }

    #[test]
    fn disorder_size_mismatch_is_rejected() {
        let spec = LatticeSpec::hcrow(4);
        let bad = DisorderRealization {
            seed: 0,
            detunings: vec![0.0; 7],
        };
        assert_eq!(
            build_hamiltonian(&spec, Circulation::Ccw, Some(&bad)),
            Err(Error::SizeMismatch {
                expected: 8,
                actual: 7
            })
        );
    }

    #[test]
    fn zero_disorder_samples_zero_vector() {
        let spec = LatticeSpec::regular_crow(17).with_disorder_std(0.0);
        for seed in [0, 1, u64::MAX] {
            assert_eq!(sample_disorder(&spec, seed).detunings, vec![0.0; 17]);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = LatticeSpec::hcrow(20);
        assert_eq!(sample_disorder(&spec, 99), sample_disorder(&spec, 99));
        assert_ne!(sample_disorder(&spec, 99), sample_disorder(&spec, 100));
    }

    #[test]
    fn pooled_disorder_moments() {
        // 10^5 pooled draws: mean within 0.01J, std within 2% of U.
        let spec = LatticeSpec::regular_crow(1000).with_disorder_std(0.8);
        let draws: Vec<f64> = (0..100)
            .flat_map(|i| sample_disorder(&spec, seed::derive_seed(7, i)).detunings)
            .collect();
        assert_eq!(draws.len(), 100_000);
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var.sqrt() / 0.8 - 1.0).abs() < 0.02, "std {}", var.sqrt());
    }

    #[test]
    fn band_closed_form_special_points() {
        let spec = LatticeSpec::hcrow(1);
        let at_pi = band_point(&spec, PI);
        assert_abs_diff_eq!(at_pi.omega_plus, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at_pi.v_plus, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at_pi.v_minus.unwrap(), -2.0, epsilon = 1e-12);
        let at_zero = band_point(&spec, 0.0);
        assert_abs_diff_eq!(at_zero.omega_plus, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at_zero.omega_minus.unwrap(), -4.0, epsilon = 1e-12);
    }

    #[test]
    fn bloch_vector_matches_d_components() {
        let spec = LatticeSpec::hcrow(1);
        for k in [0.0, 0.3, 1.0, PI, 4.0] {
            let m = bloch_matrix(&spec, Circulation::Ccw, k);
            let dx = 2.0 * (1.0 + f64::cos(k));
            let dz = -2.0 * f64::sin(k);
            assert_abs_diff_eq!(m[(0, 0)].re, dz, epsilon = 1e-14);
            assert_abs_diff_eq!(m[(1, 1)].re, -dz, epsilon = 1e-14);
            assert_abs_diff_eq!(m[(0, 1)].re, dx, epsilon = 1e-14);
            assert_abs_diff_eq!(m[(0, 1)].im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn band_structure_rejects_short_grid() {
        assert!(band_structure(&LatticeSpec::hcrow(1), 1).is_err());
        let bs = band_structure(&LatticeSpec::hcrow(1), 3).unwrap();
        assert_eq!(bs.k_grid, vec![0.0, PI, 2.0 * PI]);
        assert_eq!(bs.omega_plus[1], 0.0);
    }

    #[test]
    fn regular_crow_band_is_single_cosine() {
        let bs = band_structure(&LatticeSpec::regular_crow(5), 5).unwrap();
        assert!(bs.omega_minus.is_none());
        assert_abs_diff_eq!(bs.omega_plus[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(bs.v_plus[1], -2.0, epsilon = 1e-14);
    }

    #[test]
    fn linearization_defect_examples() {
        let spec = LatticeSpec::hcrow(1);
        assert_eq!(linearization_defect(&spec, 0.0).unwrap(), 0.0);
        let expected = 2.0 * (1.0 - f64::cos(0.1));
        assert_abs_diff_eq!(linearization_defect(&spec, 0.1).unwrap(), expected, epsilon = 1e-14);
        let ratio = linearization_defect(&spec, 0.02).unwrap() / linearization_defect(&spec, 0.01).unwrap();
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        assert!(linearization_defect(&spec, 0.6).is_err());
        assert!(linearization_defect(&LatticeSpec::regular_crow(3), 0.1).is_err());
    }

    #[test]
    fn combined_matrix_is_locked_to_first_order() {
        // Diagonal of the combined matrix near π is 2J·diag(Δk, −Δk, −Δk, Δk).
        let spec = LatticeSpec::hcrow(1);
        let dk = 1e-4;
        let m = combined_bloch_matrix(&spec, PI + dk);
        let expected = [dk, -dk, -dk, dk];
        for (i, e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(m[(i, i)].re, 2.0 * e, epsilon = 1e-10);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(LatticeSpec::hcrow(0).validate().is_err());
        assert!(LatticeSpec::hcrow(3).with_hopping(0.0).validate().is_err());
        assert!(LatticeSpec::hcrow(3).with_kappa_in(-0.1).validate().is_err());
        assert!(LatticeSpec::hcrow(3).with_disorder_std(f64::NAN).validate().is_err());
        assert!(LatticeSpec::hcrow(4).with_port_offset(2).validate().is_err());
        assert!(LatticeSpec::hcrow(5).with_port_offset(2).validate().is_ok());
    }
}
