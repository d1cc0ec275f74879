//! Two-photon observables of a pair of output spectra.
//!
//! A [`PortPair`] holds the envelope-weighted output spectra `p₁(ω)`, `p₂(ω)`
//! of the two channels together with a controlled delay `τ_c` applied to the
//! second port. Every observable is built from three trapezoidal integrals,
//!
//! ```text
//! n₁ = ∫|p₁|²,   n₂ = ∫|p₂|²,   o(τ_c) = ∫ p₁* p₂ e^{iωτ_c}
//! ```
//!
//! For a separable `|11⟩` input the balanced Hong-Ou-Mandel coincidence is
//! `½(1 − |o|²/(n₁n₂))`. For a `|2::2⟩` N00N input the state before the final
//! beam splitter lives in `{|20⟩, |11⟩, |02⟩}` with populations `A = n₁²`,
//! `B = n₂²` and coherence `C = o²`, normalized by `A + B`. Rates are
//! conditioned on both photons leaving the device (`Tr ρ = 1`).

use nalgebra::{Matrix2, Matrix3, Matrix4, SMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::FrequencyGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Output spectra of the two channels on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortPair {
    omega: Vec<f64>,
    weights: Vec<f64>,
    pub p1: Vec<Complex64>,
    pub p2: Vec<Complex64>,
    /// Controlled delay applied to port two, in units of `1/J`.
    pub tau_c: f64,
}

impl PortPair {
    pub fn new(grid: &FrequencyGrid, p1: Vec<Complex64>, p2: Vec<Complex64>) -> Result<Self> {
        for len in [p1.len(), p2.len()] {
            if len != grid.len() {
                return Err(Error::SizeMismatch {
                    expected: grid.len(),
                    actual: len,
                });
            }
        }
        Ok(PortPair {
            omega: grid.omega().to_vec(),
            weights: grid.trapezoid_weights(),
            p1,
            p2,
            tau_c: 0.0,
        })
    }

    pub fn with_delay(mut self, tau_c: f64) -> Self {
        self.tau_c = tau_c;
        self
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Integrals shared by every observable of this pair.
    pub fn overlaps(&self) -> Result<Overlaps> {
        Overlaps::new(self)
    }
}

/// Norms `n₁`, `n₂` and the delay-dependent overlap `o(τ)` of a port pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Overlaps {
    pub n1: f64,
    pub n2: f64,
    omega: Vec<f64>,
    /// `w_j · p₁*(ω_j) p₂(ω_j)`.
    cross: Vec<Complex64>,
}

impl Overlaps {
    pub fn new(ports: &PortPair) -> Result<Self> {
        let n1 = integrate_norm(&ports.weights, &ports.p1);
        let n2 = integrate_norm(&ports.weights, &ports.p2);
        if !(n1 > 0.0) {
            return Err(Error::ZeroNorm { port: "p1" });
        }
        if !(n2 > 0.0) {
            return Err(Error::ZeroNorm { port: "p2" });
        }
        let cross = ports
            .weights
            .iter()
            .zip(ports.p1.iter().zip(&ports.p2))
            .map(|(w, (a, b))| a.conj() * b * *w)
            .collect();
        Ok(Overlaps {
            n1,
            n2,
            omega: ports.omega.clone(),
            cross,
        })
    }

    /// `o(τ) = ∫ p₁* p₂ e^{iωτ} dω`.
    pub fn overlap(&self, tau: f64) -> Complex64 {
        self.omega
            .iter()
            .zip(&self.cross)
            .map(|(w, c)| c * Complex64::from_polar(1.0, w * tau))
            .sum()
    }

    /// Normalized two-photon overlap `|o(τ)|² / (n₁n₂)`, in `[0, 1]`.
    pub fn indistinguishability(&self, tau: f64) -> f64 {
        (self.overlap(tau).norm_sqr() / (self.n1 * self.n2)).min(1.0)
    }

    /// N00N constituents `(A, B, C(τ))`, unnormalized.
    pub fn noon_terms(&self, tau: f64) -> (f64, f64, Complex64) {
        let o = self.overlap(tau);
        (self.n1 * self.n1, self.n2 * self.n2, o * o)
    }
}

fn integrate_norm(weights: &[f64], p: &[Complex64]) -> f64 {
    weights.iter().zip(p).map(|(w, z)| w * z.norm_sqr()).sum()
}

/// Lossless beam splitter `c† = t a† + i r b†`, `d† = i r a† + t b†`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitter {
    pub t: f64,
    pub r: f64,
}

impl BeamSplitter {
    pub fn new(t: f64, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&r) {
            return Err(Error::invalid("beam_splitter", format!("t, r must lie in [0, 1], got t = {t}, r = {r}")));
        }
        if (t * t + r * r - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("beam_splitter", format!("t² + r² = {} ≠ 1", t * t + r * r)));
        }
        Ok(BeamSplitter { t, r })
    }

    /// Splitter with transmissivity amplitude `t` and `r = √(1 − t²)`.
    pub fn from_transmission(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid("beam_splitter", format!("t must lie in [0, 1], got {t}")));
        }
        BeamSplitter::new(t, (1.0 - t * t).sqrt())
    }

    pub fn balanced() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        BeamSplitter { t: h, r: h }
    }

    /// Single-photon mode transformation.
    pub fn mode_matrix(&self) -> Matrix2<Complex64> {
        let t = Complex64::new(self.t, 0.0);
        let ir = I * self.r;
        Matrix2::new(t, ir, ir, t)
    }
}

/// Coincidence of a separable `|11⟩` input after the splitter:
/// `t⁴ + r⁴ − 2t²r²·|o(τ_c)|²/(n₁n₂)`.
///
/// Balanced splitters reduce to `½(1 − |o|²/(n₁n₂))`; fully indistinguishable
/// photons give `(t² − r²)²` and distinguishable ones `t⁴ + r⁴`.
pub fn hom_coincidence(ports: &PortPair, bs: BeamSplitter) -> Result<f64> {
    let ov = ports.overlaps()?;
    Ok(hom_from_overlaps(&ov, ports.tau_c, bs))
}

pub fn hom_from_overlaps(ov: &Overlaps, tau_c: f64, bs: BeamSplitter) -> f64 {
    let (t2, r2) = (bs.t * bs.t, bs.r * bs.r);
    let v = ov.indistinguishability(tau_c);
    (t2 * t2 + r2 * r2 - 2.0 * t2 * r2 * v).clamp(0.0, 1.0)
}

/// Two-photon interference visibility `√(1 − 2P)`; `None` above `P = ½`.
pub fn visibility(p_coin: f64) -> Option<f64> {
    (p_coin <= 0.5).then(|| (1.0 - 2.0 * p_coin).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    BeforeBs,
    AfterBs,
}

/// Normalized two-photon state in the basis `{|20⟩, |11⟩, |02⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonDensityMatrix {
    /// `{∫|p₁|²}²`
    pub a: f64,
    /// `{∫|p₂|²}²`
    pub b: f64,
    /// `{∫p₁* p₂ e^{iωτ_c}}²`
    pub c: Complex64,
    pub matrix: Matrix3<Complex64>,
    pub stage: Stage,
}

impl TwoPhotonDensityMatrix {
    /// Assembles the pre-splitter state from its constituents.
    pub fn from_terms(a: f64, b: f64, c: Complex64) -> Result<Self> {
        let norm = a + b;
        if !(norm > 0.0) {
            return Err(Error::invalid("noon", "A + B must be positive"));
        }
        let mut m = Matrix3::zeros();
        m[(0, 0)] = Complex64::new(a / norm, 0.0);
        m[(2, 2)] = Complex64::new(b / norm, 0.0);
        m[(0, 2)] = c / norm;
        m[(2, 0)] = c.conj() / norm;
        Ok(TwoPhotonDensityMatrix {
            a,
            b,
            c,
            matrix: m,
            stage: Stage::BeforeBs,
        })
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }

    /// `⟨11|ρ|11⟩`.
    pub fn coincidence(&self) -> f64 {
        self.matrix[(1, 1)].re
    }

    /// Phase of `C` relative to `√(AB)`.
    pub fn theta(&self) -> f64 {
        self.c.arg()
    }

    /// Eigenvalues of the Hermitian matrix, ascending.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let ev = self.matrix.symmetric_eigenvalues();
        let mut v = [ev[0], ev[1], ev[2]];
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Pre-splitter N00N state of a port pair at its controlled delay.
pub fn noon_density_matrix(ports: &PortPair) -> Result<TwoPhotonDensityMatrix> {
    let (a, b, c) = ports.overlaps()?.noon_terms(ports.tau_c);
    TwoPhotonDensityMatrix::from_terms(a, b, c)
}

/// Isometry from `{|20⟩, |11⟩, |02⟩}` into the two-particle product space
/// `{|aa⟩, |ab⟩, |ba⟩, |bb⟩}`.
fn symmetric_embedding() -> SMatrix<Complex64, 4, 3> {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let one = Complex64::new(1.0, 0.0);
    SMatrix::<Complex64, 4, 3>::from_row_slice(&[
        one, ZERO, ZERO, //
        ZERO, h, ZERO, //
        ZERO, h, ZERO, //
        ZERO, ZERO, one,
    ])
}

/// Two-photon unitary on `{|20⟩, |11⟩, |02⟩}`: the tensor square of the mode
/// matrix restricted to the symmetric subspace.
pub fn two_photon_unitary(bs: BeamSplitter) -> Matrix3<Complex64> {
    let u = bs.mode_matrix();
    let uu: Matrix4<Complex64> = u.kronecker(&u);
    let s = symmetric_embedding();
    s.adjoint() * uu * s
}

/// `ρ_af = U₂ ρ U₂†`.
pub fn apply_beam_splitter(rho: &TwoPhotonDensityMatrix, bs: BeamSplitter) -> Result<TwoPhotonDensityMatrix> {
    if rho.stage != Stage::BeforeBs {
        return Err(Error::invalid("stage", "beam splitter expects a pre-splitter state"));
    }
    let u = two_photon_unitary(bs);
    Ok(TwoPhotonDensityMatrix {
        matrix: u * rho.matrix * u.adjoint(),
        stage: Stage::AfterBs,
        ..rho.clone()
    })
}

/// Coincidence of the N00N state after a balanced splitter,
/// `½(1 + (C + C*)/(A + B))`.
pub fn noon_coincidence(ports: &PortPair) -> Result<f64> {
    let (a, b, c) = ports.overlaps()?.noon_terms(ports.tau_c);
    Ok(noon_coincidence_from_terms(a, b, c))
}

pub fn noon_coincidence_from_terms(a: f64, b: f64, c: Complex64) -> f64 {
    0.5 * (1.0 + 2.0 * c.re / (a + b))
}

/// Purity written in port integrals,
/// `1 + 2({|o|²}² − {n₁n₂}²)/(n₁² + n₂²)²`.
pub fn noon_purity(ports: &PortPair) -> Result<f64> {
    let ov = ports.overlaps()?;
    let o2 = ov.overlap(ports.tau_c).norm_sqr();
    let prod = ov.n1 * ov.n2;
    let denom = ov.n1 * ov.n1 + ov.n2 * ov.n2;
    Ok(1.0 + 2.0 * (o2 * o2 - prod * prod) / (denom * denom))
}

/// Purity from the density-matrix constituents, `(A² + B² + 2|C|²)/(A + B)²`.
pub fn purity_from_terms(a: f64, b: f64, c: Complex64) -> f64 {
    (a * a + b * b + 2.0 * c.norm_sqr()) / ((a + b) * (a + b))
}

/// `−x ln x − (1 − x) ln(1 − x)` in nats, with `0 ln 0 = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    let h = |p: f64| if p <= 0.0 || p >= 1.0 { 0.0 } else { -p * p.ln() };
    h(x) + h(1.0 - x)
}

/// Entanglement entropy of port `a` for an `N`-photon N00N input, with
/// `x = A/(A + B)`, `A = n₁ᴺ`, `B = n₂ᴺ`. Independent of `τ_c`.
///
/// Only `N = 2` follows directly from the two-photon density matrix; larger
/// `N` uses the same product structure of the `N`-photon output state.
pub fn entanglement_entropy(ports: &PortPair, num_photons: u32) -> Result<f64> {
    if num_photons == 0 {
        return Err(Error::invalid("num_photons", "must be at least 1"));
    }
    let n1 = integrate_norm(&ports.weights, &ports.p1);
    let n2 = integrate_norm(&ports.weights, &ports.p2);
    entropy_from_norms(n1, n2, num_photons)
}

pub fn entropy_from_norms(n1: f64, n2: f64, num_photons: u32) -> Result<f64> {
    if !(n1 + n2 > 0.0) {
        return Err(Error::invalid("noon", "A + B must be positive"));
    }
    Ok(binary_entropy(population_ratio(n1, n2, num_photons)))
}

/// `x = n₁ᴺ / (n₁ᴺ + n₂ᴺ)`, evaluated without overflow.
pub fn population_ratio(n1: f64, n2: f64, num_photons: u32) -> f64 {
    if n1 == 0.0 {
        return 0.0;
    }
    if n2 == 0.0 {
        return 1.0;
    }
    let ratio = (n2 / n1).powi(num_photons as i32);
    1.0 / (1.0 + ratio)
}
