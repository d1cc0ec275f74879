//! Frequency-domain steady state of a driven, lossy lattice.
//!
//! For every frequency `ω` on the grid the intracavity amplitudes solve
//!
//! ```text
//! (−iω·I + i·H + K) x = √(2κ_ex) · e_drive
//! ```
//!
//! where `K` holds the intrinsic loss `κ_in` on every site plus `κ_ex` for
//! every lead attached to a site. The drive is normalized to `p_in = 1`, so
//! the envelope of a wavepacket is applied downstream (the system is linear).
//! The output port emits `p_out = −√(2κ_ex) · x_readout` and the input port
//! reflects `p_in − √(2κ_ex) · x_drive`.
//!
//! Under this sign convention a lone resonator peaks at its (detuned)
//! resonance and the phase of `p_out` grows with `ω` through a delay line, so
//! the group delay `τ = dφ/dω` of a clean lattice is positive.

mod banded;

pub use banded::{BandedLu, BandedMatrix, Singular};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{CouplingFootprint, Hamiltonian, LatticeKind, LatticeSpec, Sublattice};

/// Amplitude floor, relative to `max_ω |p_out|`, below which the output phase
/// is treated as undefined.
pub const DELAY_AMPLITUDE_FLOOR: f64 = 1e-6;

/// Uniform frequency grid, symmetric about and containing `ω = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    omega: Vec<f64>,
    spacing: f64,
}

impl FrequencyGrid {
    /// `count` points (odd, at least 3) spanning `[−half_width, half_width]`.
    pub fn symmetric(half_width: f64, count: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::invalid("omega_max", format!("must be finite and > 0, got {half_width}")));
        }
        if count < 3 || count % 2 == 0 {
            return Err(Error::invalid("omega_points", format!("must be odd and >= 3, got {count}")));
        }
        let mid = (count / 2) as isize;
        let spacing = half_width / mid as f64;
        let omega = (0..count as isize).map(|j| (j - mid) as f64 * spacing).collect();
        Ok(FrequencyGrid { omega, spacing })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn zero_index(&self) -> usize {
        self.omega.len() / 2
    }

    /// Index of the grid point equal to `omega` (to within 1e-9 spacings).
    pub fn index_of(&self, omega: f64) -> Result<usize> {
        let pos = omega / self.spacing + self.zero_index() as f64;
        let idx = pos.round();
        if (pos - idx).abs() > 1e-9 || idx < 0.0 || idx >= self.len() as f64 {
            return Err(Error::OffGrid { omega });
        }
        Ok(idx as usize)
    }

    /// Trapezoidal quadrature weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|j| if j == 0 || j == n - 1 { 0.5 * self.spacing } else { self.spacing })
            .collect()
    }
}

impl Default for FrequencyGrid {
    /// 513 points on `[−4J, 4J]`.
    fn default() -> Self {
        FrequencyGrid::symmetric(4.0, 513).expect("valid default grid")
    }
}

/// Spectral amplitude of the input wavepacket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEnvelope {
    pub sigma: f64,
    pub amplitudes: Vec<Complex64>,
}

impl InputEnvelope {
    /// `p_in(ω) = exp(−ω² / 2σ²)`.
    pub fn gaussian(grid: &FrequencyGrid, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("sigma", format!("must be finite and > 0, got {sigma}")));
        }
        let amplitudes = grid
            .omega()
            .iter()
            .map(|w| Complex64::new((-w * w / (2.0 * sigma * sigma)).exp(), 0.0))
            .collect();
        Ok(InputEnvelope { sigma, amplitudes })
    }

    /// Multiplies a unit-drive spectrum by the envelope.
    pub fn apply(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(spectrum.len(), self.amplitudes.len(), "envelope/grid length");
        spectrum.iter().zip(&self.amplitudes).map(|(p, e)| p * e).collect()
    }
}

/// Excitation channel. Channel one drives and reads the a-sublattice
/// (counter-clockwise circulation), channel two the b-sublattice (clockwise).
/// For a regular CROW both channels use the chain's end sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    One,
    Two,
}

impl Channel {
    pub fn sublattice(self) -> Sublattice {
        match self {
            Channel::One => Sublattice::A,
            Channel::Two => Sublattice::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    /// Lead on the drive side.
    Near,
    /// Lead on the readout side.
    Far,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lead {
    pub site: usize,
    pub edge: Edge,
}

/// Where the leads attach for a given spec and channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortLayout {
    pub drive_site: usize,
    pub readout_site: usize,
    pub leads: Vec<Lead>,
}

impl PortLayout {
    pub fn new(spec: &LatticeSpec, channel: Channel) -> Self {
        let first = spec.port_offset;
        let last = spec.num_cells - 1 - spec.port_offset;
        let sub = match spec.kind {
            LatticeKind::HCrow => channel.sublattice(),
            LatticeKind::RegularCrow => Sublattice::A,
        };
        let drive_site = spec.site(first, sub);
        let readout_site = spec.site(last, sub);
        let cell_sites = |cell: usize| -> Vec<usize> {
            match spec.kind {
                LatticeKind::HCrow => vec![spec.site(cell, Sublattice::A), spec.site(cell, Sublattice::B)],
                LatticeKind::RegularCrow => vec![spec.site(cell, Sublattice::A)],
            }
        };
        let (near, far) = match spec.footprint {
            CouplingFootprint::EdgeCell => (cell_sites(first), cell_sites(last)),
            CouplingFootprint::DriveReadout => (vec![drive_site], vec![readout_site]),
        };
        let leads = near
            .into_iter()
            .map(|site| Lead { site, edge: Edge::Near })
            .chain(far.into_iter().map(|site| Lead { site, edge: Edge::Far }))
            .collect();
        PortLayout {
            drive_site,
            readout_site,
            leads,
        }
    }

    /// Total external coupling on each site (a site with two leads gets 2κ_ex).
    fn external_loss(&self, dim: usize, kappa_ex: f64) -> Vec<f64> {
        let mut k = vec![0.0; dim];
        for lead in &self.leads {
            k[lead.site] += kappa_ex;
        }
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SolverBackend {
    /// Banded LU with partial pivoting, `O(n·b²)` per frequency.
    #[default]
    Banded,
    /// Dense LU from nalgebra; kept as an independent cross-check.
    Dense,
}

/// Steady-state amplitudes of one realization and one channel on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpectrum {
    pub grid: FrequencyGrid,
    pub channel: Channel,
    pub layout: PortLayout,
    pub kappa_ex: f64,
    dim: usize,
    /// Row-major `grid.len() × dim`.
    site_fields: Vec<Complex64>,
    pub p_out: Vec<Complex64>,
    pub reflection_amp: Vec<Complex64>,
}

impl FieldSpectrum {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Site amplitudes at grid index `w`.
    pub fn fields_at(&self, w: usize) -> &[Complex64] {
        &self.site_fields[w * self.dim..(w + 1) * self.dim]
    }

    /// Outgoing amplitude of each lead at grid index `w`. The driven lead
    /// carries the reflected field `1 − √(2κ_ex)·x`.
    pub fn lead_outputs(&self, w: usize) -> Vec<(Lead, Complex64)> {
        let g = (2.0 * self.kappa_ex).sqrt();
        let x = self.fields_at(w);
        let mut drive_seen = false;
        self.layout
            .leads
            .iter()
            .map(|&lead| {
                let mut out = -g * x[lead.site];
                if lead.edge == Edge::Near && lead.site == self.layout.drive_site && !drive_seen {
                    drive_seen = true;
                    out += 1.0;
                }
                (lead, out)
            })
            .collect()
    }

    /// Multiplies every amplitude by `c` (the response to a drive `c·p_in`).
    pub fn scaled(&self, c: Complex64) -> FieldSpectrum {
        let mut out = self.clone();
        out.site_fields.iter_mut().for_each(|x| *x *= c);
        out.p_out.iter_mut().for_each(|x| *x *= c);
        // The reflected field is c·(1 − √(2κ)x); scale the whole amplitude.
        out.reflection_amp.iter_mut().for_each(|x| *x *= c);
        out
    }
}

/// Solves the steady state with the default (banded) backend.
pub fn solve_steady_state(
    h: &Hamiltonian,
    spec: &LatticeSpec,
    grid: &FrequencyGrid,
    channel: Channel,
) -> Result<FieldSpectrum> {
    solve_steady_state_with(h, spec, grid, channel, SolverBackend::Banded)
}

pub fn solve_steady_state_with(
    h: &Hamiltonian,
    spec: &LatticeSpec,
    grid: &FrequencyGrid,
    channel: Channel,
    backend: SolverBackend,
) -> Result<FieldSpectrum> {
    spec.validate()?;
    let dim = spec.dim();
    if h.dim() != dim {
        return Err(Error::SizeMismatch {
            expected: dim,
            actual: h.dim(),
        });
    }
    let layout = PortLayout::new(spec, channel);
    let loss: Vec<f64> = layout
        .external_loss(dim, spec.kappa_ex)
        .into_iter()
        .map(|k| k + spec.kappa_in)
        .collect();
    let g = (2.0 * spec.kappa_ex).sqrt();

    let mut site_fields = Vec::with_capacity(grid.len() * dim);
    let mut p_out = Vec::with_capacity(grid.len());
    let mut reflection_amp = Vec::with_capacity(grid.len());
    let mut rhs = vec![Complex64::new(0.0, 0.0); dim];

    for &omega in grid.omega() {
        rhs.fill(Complex64::new(0.0, 0.0));
        rhs[layout.drive_site] = Complex64::new(g, 0.0);
        match backend {
            SolverBackend::Banded => solve_banded(h, &loss, omega, &mut rhs)?,
            SolverBackend::Dense => solve_dense(h, &loss, omega, &mut rhs)?,
        }
        p_out.push(-g * rhs[layout.readout_site]);
        reflection_amp.push(1.0 - g * rhs[layout.drive_site]);
        site_fields.extend_from_slice(&rhs);
    }

    Ok(FieldSpectrum {
        grid: grid.clone(),
        channel,
        layout,
        kappa_ex: spec.kappa_ex,
        dim,
        site_fields,
        p_out,
        reflection_amp,
    })
}

fn system_entry(h: &Hamiltonian, loss: &[f64], omega: f64, i: usize, j: usize) -> Complex64 {
    let i_unit = Complex64::new(0.0, 1.0);
    let mut v = i_unit * h.get(i, j);
    if i == j {
        v += Complex64::new(loss[i], -omega);
    }
    v
}

fn solve_banded(h: &Hamiltonian, loss: &[f64], omega: f64, rhs: &mut [Complex64]) -> Result<()> {
    let n = h.dim();
    let bw = h.bandwidth();
    let mut a = BandedMatrix::zeros(n, bw, bw);
    for i in 0..n {
        for j in i.saturating_sub(bw)..(i + bw + 1).min(n) {
            a.set(i, j, system_entry(h, loss, omega, i, j));
        }
    }
    let lu = a.factorize().map_err(|_| Error::SingularSystem { omega })?;
    lu.solve_in_place(rhs);
    Ok(())
}

fn solve_dense(h: &Hamiltonian, loss: &[f64], omega: f64, rhs: &mut [Complex64]) -> Result<()> {
    let n = h.dim();
    let a = DMatrix::from_fn(n, n, |i, j| system_entry(h, loss, omega, i, j));
    let x = a
        .lu()
        .solve(&DVector::from_column_slice(rhs))
        .ok_or(Error::SingularSystem { omega })?;
    if x.iter().any(|z| !z.is_finite()) {
        return Err(Error::SingularSystem { omega });
    }
    rhs.copy_from_slice(x.as_slice());
    Ok(())
}

/// `T(ω) = |p_out(ω)|²` for a unit drive.
pub fn transmission(fs: &FieldSpectrum) -> Vec<f64> {
    fs.p_out.iter().map(|p| p.norm_sqr()).collect()
}

/// `R(ω) = |1 − √(2κ_ex)·x_drive(ω)|²` for a unit drive.
pub fn reflection(fs: &FieldSpectrum) -> Vec<f64> {
    fs.reflection_amp.iter().map(|r| r.norm_sqr()).collect()
}

/// Outgoing flux summed over every drive-side lead.
pub fn total_reflection(fs: &FieldSpectrum) -> Vec<f64> {
    lead_flux(fs, Edge::Near)
}

/// Outgoing flux summed over every readout-side lead.
pub fn total_transmission(fs: &FieldSpectrum) -> Vec<f64> {
    lead_flux(fs, Edge::Far)
}

fn lead_flux(fs: &FieldSpectrum, edge: Edge) -> Vec<f64> {
    (0..fs.grid.len())
        .map(|w| {
            fs.lead_outputs(w)
                .into_iter()
                .filter(|(lead, _)| lead.edge == edge)
                .map(|(_, out)| out.norm_sqr())
                .sum()
        })
        .collect()
}

/// `|x_site|²` at grid frequency `omega`, ordered by site index.
pub fn intensity_profile(fs: &FieldSpectrum, omega: f64) -> Result<Vec<f64>> {
    let w = fs.grid.index_of(omega)?;
    Ok(fs.fields_at(w).iter().map(|x| x.norm_sqr()).collect())
}

/// Group delay per grid point; `None` where the amplitude floor excludes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayStatistic {
    pub tau: Vec<Option<f64>>,
    /// Number of grid points without a valid delay.
    pub excluded: usize,
}

impl DelayStatistic {
    pub fn at(&self, w: usize) -> Option<f64> {
        self.tau[w]
    }
}

/// Wraps a phase difference into `(−π, π]`.
fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Phase of `values` with `±π` jumps removed along the sequence.
pub fn unwrap_phase(values: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev_raw = 0.0;
    let mut acc = 0.0;
    for (j, v) in values.iter().enumerate() {
        let raw = v.arg();
        acc = if j == 0 { raw } else { acc + wrap(raw - prev_raw) };
        prev_raw = raw;
        out.push(acc);
    }
    out
}

/// `τ(ω) = dφ/dω` of the output phase, central differences in the interior
/// and one-sided at the grid ends.
pub fn group_delay(fs: &FieldSpectrum) -> DelayStatistic {
    let p = &fs.p_out;
    let n = p.len();
    let max = p.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let floor = DELAY_AMPLITUDE_FLOOR * max;
    let valid: Vec<bool> = p.iter().map(|z| max > 0.0 && z.norm() >= floor).collect();
    let phase = unwrap_phase(p);
    let dw = fs.grid.spacing();

    let tau: Vec<Option<f64>> = (0..n)
        .map(|j| {
            let (lo, hi) = if j == 0 {
                (0, 1)
            } else if j == n - 1 {
                (n - 2, n - 1)
            } else {
                (j - 1, j + 1)
            };
            (valid[lo] && valid[hi] && valid[j]).then(|| (phase[hi] - phase[lo]) / ((hi - lo) as f64 * dw))
        })
        .collect();
    let excluded = tau.iter().filter(|t| t.is_none()).count();
    DelayStatistic { tau, excluded }
}

/// `10·log₁₀(x)`.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
