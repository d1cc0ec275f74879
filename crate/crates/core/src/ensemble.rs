//! Seeded disorder ensembles and their deterministic reduction.
//!
//! Realization `i` is a pure function of `(spec, i)`: its disorder comes from
//! [`seed::derive_seed`]`(master_seed, i)`. Realizations run on a rayon pool
//! and are collected by index, and every reduction walks them in index order,
//! so a summary is bit-identical for any thread count.
//!
//! For an H-CROW both channels share one disorder draw (the same rings carry
//! both circulations). The regular-CROW comparator is a pair of independent
//! chains with independent disorder, one per photon path.
//!
//! Classical statistics (transmission, reflection, delay) pool both channels.
//! Transmission is summarized both linearly and in decibels; the decibel
//! summary averages `10·log₁₀ T` over realizations.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, sample_disorder, Circulation, LatticeKind, LatticeSpec};
use crate::quantum::{self, BeamSplitter, Overlaps, PortPair};
use crate::seed;
use crate::stats::{Histogram, Stat};
use crate::transport::{self, Channel, FieldSpectrum, FrequencyGrid, InputEnvelope};

/// Largest tolerated fraction of failed realizations.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

pub const DEFAULT_REALIZATIONS: usize = 500;
pub const DEFAULT_SIGMA: f64 = 0.5;
pub const DEFAULT_TAU_POINTS: usize = 101;
pub const DEFAULT_HISTOGRAM_BINS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    Transmission,
    Reflection,
    Profile,
    Delay,
    Hom,
    NoonCoincidence,
    NoonPurity,
    NoonEntropy,
}

impl Observable {
    pub const ALL: [Observable; 8] = [
        Observable::Transmission,
        Observable::Reflection,
        Observable::Profile,
        Observable::Delay,
        Observable::Hom,
        Observable::NoonCoincidence,
        Observable::NoonPurity,
        Observable::NoonEntropy,
    ];

    fn is_quantum(self) -> bool {
        matches!(
            self,
            Observable::Hom | Observable::NoonCoincidence | Observable::NoonPurity | Observable::NoonEntropy
        )
    }

    fn needs_delay_grid(self) -> bool {
        matches!(self, Observable::Hom | Observable::NoonCoincidence | Observable::NoonPurity)
    }
}

/// Uniform controlled-delay grid `[−10/σ, 10/σ]` with `points` entries.
pub fn default_tau_grid(sigma: f64, points: usize) -> Vec<f64> {
    uniform_grid(10.0 / sigma, points)
}

/// `points` equally spaced values on `[−half_width, half_width]`; a single
/// point sits at zero.
pub fn uniform_grid(half_width: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.0];
    }
    let mid = (points - 1) as f64 / 2.0;
    (0..points)
        .map(|j| (j as f64 - mid) * half_width / mid)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub lattice: LatticeSpec,
    pub realizations: usize,
    pub master_seed: u64,
    pub grid: FrequencyGrid,
    pub envelope: InputEnvelope,
    pub tau_c_grid: Vec<f64>,
    pub observables: BTreeSet<Observable>,
    /// Photon numbers `N` for the entanglement entropy.
    pub photon_numbers: Vec<u32>,
    pub histogram_bins: usize,
    /// Worker threads; `None` uses rayon's global pool.
    pub parallelism: Option<usize>,
    pub keep_records: bool,
}

impl EnsembleSpec {
    /// Reference ensemble: 500 realizations on the default grid, `σ = 0.5J`,
    /// 101 delays on `[−10/σ, 10/σ]`, every observable, `N = 1..=10`.
    pub fn new(lattice: LatticeSpec) -> Self {
        let grid = FrequencyGrid::default();
        let envelope = InputEnvelope::gaussian(&grid, DEFAULT_SIGMA).expect("valid default envelope");
        EnsembleSpec {
            lattice,
            realizations: DEFAULT_REALIZATIONS,
            master_seed: 0,
            grid,
            envelope,
            tau_c_grid: default_tau_grid(DEFAULT_SIGMA, DEFAULT_TAU_POINTS),
            observables: Observable::ALL.into_iter().collect(),
            photon_numbers: (1..=10).collect(),
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
            parallelism: None,
            keep_records: false,
        }
    }

    pub fn with_realizations(mut self, realizations: usize) -> Self {
        self.realizations = realizations;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    /// Replaces the grid and rebuilds the Gaussian envelope on it.
    pub fn with_grid(mut self, grid: FrequencyGrid) -> Result<Self> {
        self.envelope = InputEnvelope::gaussian(&grid, self.envelope.sigma)?;
        self.grid = grid;
        Ok(self)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        self.envelope = InputEnvelope::gaussian(&self.grid, sigma)?;
        Ok(self)
    }

    pub fn with_tau_grid(mut self, tau_c_grid: Vec<f64>) -> Self {
        self.tau_c_grid = tau_c_grid;
        self
    }

    pub fn with_observables(mut self, observables: impl IntoIterator<Item = Observable>) -> Self {
        self.observables = observables.into_iter().collect();
        self
    }

    pub fn with_photon_numbers(mut self, photon_numbers: Vec<u32>) -> Self {
        self.photon_numbers = photon_numbers;
        self
    }

    pub fn with_parallelism(mut self, threads: Option<usize>) -> Self {
        self.parallelism = threads;
        self
    }

    pub fn with_records(mut self, keep: bool) -> Self {
        self.keep_records = keep;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        if self.realizations == 0 {
            return Err(Error::invalid("realizations", "must be at least 1"));
        }
        if self.envelope.amplitudes.len() != self.grid.len() {
            return Err(Error::SizeMismatch {
                expected: self.grid.len(),
                actual: self.envelope.amplitudes.len(),
            });
        }
        if self.observables.iter().any(|o| o.needs_delay_grid()) && self.tau_c_grid.is_empty() {
            return Err(Error::invalid("tau_c_grid", "must be non-empty for delay-dependent quantum observables"));
        }
        if self.tau_c_grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("tau_c_grid", "entries must be finite"));
        }
        if self.observables.contains(&Observable::NoonEntropy) {
            if self.photon_numbers.is_empty() {
                return Err(Error::invalid("photon_numbers", "must be non-empty"));
            }
            if self.photon_numbers.contains(&0) {
                return Err(Error::invalid("photon_numbers", "entries must be at least 1"));
            }
        }
        if self.histogram_bins == 0 {
            return Err(Error::invalid("histogram_bins", "must be at least 1"));
        }
        if self.parallelism == Some(0) {
            return Err(Error::invalid("parallelism", "must be at least 1"));
        }
        Ok(())
    }

    fn wants(&self, o: Observable) -> bool {
        self.observables.contains(&o)
    }

    /// Index of the delay closest to `τ_c = 0`.
    pub fn tau_zero_index(&self) -> usize {
        nearest_zero(&self.tau_c_grid)
    }
}

fn nearest_zero(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Seed of realization `index` in an ensemble keyed by `master_seed`.
pub fn realization_seed(master_seed: u64, index: usize) -> u64 {
    seed::derive_seed(master_seed, index as u64)
}

/// Raw per-realization values. Vectors of observables that were not
/// requested are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub index: usize,
    pub seed: u64,
    /// Disorder seeds of the chains (one for an H-CROW, two for CROW pairs).
    pub disorder_seeds: Vec<u64>,
    pub transmission: [Vec<f64>; 2],
    pub reflection: [Vec<f64>; 2],
    /// Channel-one site intensities at `ω = 0`.
    pub profile: Vec<f64>,
    pub delay: [Vec<Option<f64>>; 2],
    pub hom: Vec<f64>,
    pub noon_coincidence: Vec<f64>,
    pub noon_purity: Vec<f64>,
    /// `exp(S_a)` for each requested photon number.
    pub exp_entropy: Vec<f64>,
}

impl RealizationRecord {
    pub fn min_hom(&self) -> f64 {
        self.hom.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRealization {
    pub index: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySummary {
    pub per_omega: Vec<Stat>,
    /// Excluded (realization, channel) samples at each frequency.
    pub excluded: Vec<usize>,
    pub at_zero: Stat,
    /// Root mean square of the delays at `ω = 0`.
    pub tau_rms: f64,
    pub variance_at_zero: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomSummary {
    pub curve: Vec<Stat>,
    /// Minimum over the delay grid per realization, then ensemble statistics.
    pub min_coincidence: Stat,
    /// Minimum over the delay grid of the ensemble-mean curve.
    pub min_of_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoonSummary {
    pub coincidence: Option<Vec<Stat>>,
    /// Coincidence distribution at the delay closest to zero, on `[0, 1]`.
    pub histogram_at_zero: Option<Histogram>,
    pub purity: Option<Vec<Stat>>,
    pub purity_at_zero: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySummary {
    pub photon_numbers: Vec<u32>,
    /// Statistics of `exp(S_a)` per photon number.
    pub exp_entropy: Vec<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub kind: LatticeKind,
    pub num_cells: usize,
    pub master_seed: u64,
    pub requested: usize,
    pub used: usize,
    pub failures: Vec<FailedRealization>,
    pub omega: Vec<f64>,
    pub tau_c: Vec<f64>,
    pub tau_zero_index: usize,
    pub transmission: Option<Vec<Stat>>,
    pub transmission_db: Option<Vec<Stat>>,
    pub reflection: Option<Vec<Stat>>,
    pub profile: Option<Vec<Stat>>,
    pub delay: Option<DelaySummary>,
    pub hom: Option<HomSummary>,
    pub noon: Option<NoonSummary>,
    pub entropy: Option<EntropySummary>,
    pub records: Option<Vec<RealizationRecord>>,
}

impl EnsembleSummary {
    fn zero(&self) -> usize {
        self.omega.len() / 2
    }

    /// Statistics of `T(0)`.
    pub fn transmission_at_zero(&self) -> Option<Stat> {
        self.transmission.as_ref().map(|t| t[self.zero()])
    }

    /// Statistics of `10·log₁₀ T(0)`.
    pub fn transmission_db_at_zero(&self) -> Option<Stat> {
        self.transmission_db.as_ref().map(|t| t[self.zero()])
    }

    pub fn mean_min_coincidence(&self) -> Option<f64> {
        self.hom.as_ref().map(|h| h.min_coincidence.mean)
    }

    /// Mean `exp(S_a)` at photon number `n`.
    pub fn mean_exp_entropy(&self, n: u32) -> Option<f64> {
        let e = self.entropy.as_ref()?;
        let i = e.photon_numbers.iter().position(|&m| m == n)?;
        Some(e.exp_entropy[i].mean)
    }
}

/// Phase factors `e^{iωτ}` for every delay, shared by all realizations.
struct PhaseTable {
    rows: Vec<Vec<Complex64>>,
}

impl PhaseTable {
    fn new(omega: &[f64], taus: &[f64]) -> Self {
        let rows = taus
            .iter()
            .map(|&tau| omega.iter().map(|&w| Complex64::from_polar(1.0, w * tau)).collect())
            .collect();
        PhaseTable { rows }
    }

    fn overlap(&self, row: usize, cross: &[Complex64]) -> Complex64 {
        self.rows[row].iter().zip(cross).map(|(e, c)| e * c).sum()
    }
}

struct Context<'a> {
    spec: &'a EnsembleSpec,
    phases: Option<PhaseTable>,
    weights: Vec<f64>,
}

fn evaluate(ctx: &Context<'_>, index: usize) -> std::result::Result<RealizationRecord, FailedRealization> {
    let spec = ctx.spec;
    let lattice = &spec.lattice;
    let seed = realization_seed(spec.master_seed, index);
    let fail = |e: Error| FailedRealization {
        index,
        seed,
        message: e.to_string(),
    };

    let (spectra, disorder_seeds) = match lattice.kind {
        LatticeKind::HCrow => {
            let dseed = seed::derive_seed(seed, 0);
            let d = sample_disorder(lattice, dseed);
            let mut out = Vec::with_capacity(2);
            for (circ, ch) in [(Circulation::Ccw, Channel::One), (Circulation::Cw, Channel::Two)] {
                let h = build_hamiltonian(lattice, circ, Some(&d)).map_err(fail)?;
                out.push(transport::solve_steady_state(&h, lattice, &spec.grid, ch).map_err(fail)?);
            }
            (out, vec![dseed])
        }
        LatticeKind::RegularCrow => {
            let seeds = vec![seed::derive_seed(seed, 0), seed::derive_seed(seed, 1)];
            let mut out = Vec::with_capacity(2);
            for (&s, ch) in seeds.iter().zip([Channel::One, Channel::Two]) {
                let d = sample_disorder(lattice, s);
                let h = build_hamiltonian(lattice, Circulation::Ccw, Some(&d)).map_err(fail)?;
                out.push(transport::solve_steady_state(&h, lattice, &spec.grid, ch).map_err(fail)?);
            }
            (out, seeds)
        }
    };
    let (fs1, fs2) = (&spectra[0], &spectra[1]);

    let both = |f: fn(&FieldSpectrum) -> Vec<f64>| [f(fs1), f(fs2)];
    let mut record = RealizationRecord {
        index,
        seed,
        disorder_seeds,
        transmission: [Vec::new(), Vec::new()],
        reflection: [Vec::new(), Vec::new()],
        profile: Vec::new(),
        delay: [Vec::new(), Vec::new()],
        hom: Vec::new(),
        noon_coincidence: Vec::new(),
        noon_purity: Vec::new(),
        exp_entropy: Vec::new(),
    };
    if spec.wants(Observable::Transmission) {
        record.transmission = both(transport::transmission);
    }
    if spec.wants(Observable::Reflection) {
        record.reflection = both(transport::reflection);
    }
    if spec.wants(Observable::Profile) {
        record.profile = transport::intensity_profile(fs1, 0.0).map_err(fail)?;
    }
    if spec.wants(Observable::Delay) {
        record.delay = [transport::group_delay(fs1).tau, transport::group_delay(fs2).tau];
    }

    if spec.observables.iter().any(|o| o.is_quantum()) {
        let p1 = spec.envelope.apply(&fs1.p_out);
        let p2 = spec.envelope.apply(&fs2.p_out);
        let n1: f64 = ctx.weights.iter().zip(&p1).map(|(w, z)| w * z.norm_sqr()).sum();
        let n2: f64 = ctx.weights.iter().zip(&p2).map(|(w, z)| w * z.norm_sqr()).sum();

        if spec.wants(Observable::NoonEntropy) {
            record.exp_entropy = spec
                .photon_numbers
                .iter()
                .map(|&n| quantum::entropy_from_norms(n1, n2, n).map(f64::exp))
                .collect::<Result<_>>()
                .map_err(fail)?;
        }

        if let Some(phases) = &ctx.phases {
            if !(n1 > 0.0) {
                return Err(fail(Error::ZeroNorm { port: "p1" }));
            }
            if !(n2 > 0.0) {
                return Err(fail(Error::ZeroNorm { port: "p2" }));
            }
            let cross: Vec<Complex64> = ctx
                .weights
                .iter()
                .zip(p1.iter().zip(&p2))
                .map(|(w, (a, b))| a.conj() * b * *w)
                .collect();
            let bs = BeamSplitter::balanced();
            let (a, b) = (n1 * n1, n2 * n2);
            for row in 0..spec.tau_c_grid.len() {
                let o = phases.overlap(row, &cross);
                if spec.wants(Observable::Hom) {
                    let v = (o.norm_sqr() / (n1 * n2)).min(1.0);
                    let (t2, r2) = (bs.t * bs.t, bs.r * bs.r);
                    record.hom.push((t2 * t2 + r2 * r2 - 2.0 * t2 * r2 * v).clamp(0.0, 1.0));
                }
                let c = o * o;
                if spec.wants(Observable::NoonCoincidence) {
                    record.noon_coincidence.push(quantum::noon_coincidence_from_terms(a, b, c));
                }
                if spec.wants(Observable::NoonPurity) {
                    record.noon_purity.push(quantum::purity_from_terms(a, b, c));
                }
            }
        }
    }
    Ok(record)
}

/// Runs one seeded ensemble and reduces it.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleSummary> {
    spec.validate()?;
    let needs_phases = spec.observables.iter().any(|o| o.needs_delay_grid());
    let ctx = Context {
        spec,
        phases: needs_phases.then(|| PhaseTable::new(spec.grid.omega(), &spec.tau_c_grid)),
        weights: spec.grid.trapezoid_weights(),
    };

    let work = || {
        (0..spec.realizations)
            .into_par_iter()
            .map(|i| evaluate(&ctx, i))
            .collect::<Vec<_>>()
    };
    let outcomes = match spec.parallelism {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid("parallelism", e.to_string()))?
            .install(work),
        None => work(),
    };

    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    if failures.len() as f64 > MAX_EXCLUDED_FRACTION * spec.realizations as f64 {
        return Err(Error::ExclusionBudget {
            failed: failures.len(),
            total: spec.realizations,
            limit_percent: 100.0 * MAX_EXCLUDED_FRACTION,
        });
    }
    Ok(summarize(spec, records, failures))
}

/// Per-column statistics of equally long rows.
fn column_stats<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, len: usize) -> Vec<Stat> {
    (0..len)
        .map(|j| {
            let column: Vec<f64> = rows.clone().map(|r| r[j]).collect();
            Stat::from_values(&column)
        })
        .collect()
}

fn summarize(spec: &EnsembleSpec, records: Vec<RealizationRecord>, failures: Vec<FailedRealization>) -> EnsembleSummary {
    let n_omega = spec.grid.len();
    let zero = spec.grid.zero_index();
    let n_tau = spec.tau_c_grid.len();
    let tau_zero = spec.tau_zero_index();
    let bins = spec.histogram_bins;

    let pooled = |f: fn(&RealizationRecord) -> &[Vec<f64>; 2]| -> Vec<&[f64]> {
        records.iter().flat_map(|r| f(r).iter().map(Vec::as_slice)).collect()
    };

    let transmission = spec.wants(Observable::Transmission).then(|| {
        let rows = pooled(|r| &r.transmission);
        column_stats(rows.iter().copied(), n_omega)
    });
    let transmission_db = spec.wants(Observable::Transmission).then(|| {
        let db: Vec<Vec<f64>> = records
            .iter()
            .flat_map(|r| r.transmission.iter())
            .map(|t| t.iter().map(|&x| transport::to_db(x.max(f64::MIN_POSITIVE))).collect())
            .collect();
        column_stats(db.iter().map(Vec::as_slice), n_omega)
    });
    let reflection = spec.wants(Observable::Reflection).then(|| {
        let rows = pooled(|r| &r.reflection);
        column_stats(rows.iter().copied(), n_omega)
    });
    let profile = spec.wants(Observable::Profile).then(|| {
        column_stats(records.iter().map(|r| r.profile.as_slice()), spec.lattice.dim())
    });

    let delay = spec.wants(Observable::Delay).then(|| {
        let samples: Vec<&Vec<Option<f64>>> = records.iter().flat_map(|r| r.delay.iter()).collect();
        let mut per_omega = Vec::with_capacity(n_omega);
        let mut excluded = Vec::with_capacity(n_omega);
        for j in 0..n_omega {
            let valid: Vec<f64> = samples.iter().filter_map(|s| s[j]).collect();
            excluded.push(samples.len() - valid.len());
            per_omega.push(Stat::from_values(&valid));
        }
        let at_zero_values: Vec<f64> = samples.iter().filter_map(|s| s[zero]).collect();
        let at_zero = Stat::from_values(&at_zero_values);
        let tau_rms = if at_zero_values.is_empty() {
            f64::NAN
        } else {
            (at_zero_values.iter().map(|t| t * t).sum::<f64>() / at_zero_values.len() as f64).sqrt()
        };
        let lo = at_zero_values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = at_zero_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if at_zero_values.is_empty() { (0.0, 1.0) } else { (lo, hi) };
        DelaySummary {
            per_omega,
            excluded,
            variance_at_zero: at_zero.std * at_zero.std,
            at_zero,
            tau_rms,
            histogram: Histogram::new(&at_zero_values, lo, hi, bins),
        }
    });

    let hom = spec.wants(Observable::Hom).then(|| {
        let curve = column_stats(records.iter().map(|r| r.hom.as_slice()), n_tau);
        let mins: Vec<f64> = records.iter().map(RealizationRecord::min_hom).collect();
        let min_of_mean = curve.iter().map(|s| s.mean).fold(f64::INFINITY, f64::min);
        HomSummary {
            curve,
            min_coincidence: Stat::from_values(&mins),
            min_of_mean,
        }
    });

    let want_nc = spec.wants(Observable::NoonCoincidence);
    let want_np = spec.wants(Observable::NoonPurity);
    let noon = (want_nc || want_np).then(|| {
        let coincidence = want_nc.then(|| column_stats(records.iter().map(|r| r.noon_coincidence.as_slice()), n_tau));
        let histogram_at_zero = want_nc.then(|| {
            let at_zero: Vec<f64> = records.iter().map(|r| r.noon_coincidence[tau_zero]).collect();
            Histogram::new(&at_zero, 0.0, 1.0, bins)
        });
        let purity = want_np.then(|| column_stats(records.iter().map(|r| r.noon_purity.as_slice()), n_tau));
        let purity_at_zero = purity.as_ref().map(|p| p[tau_zero]);
        NoonSummary {
            coincidence,
            histogram_at_zero,
            purity,
            purity_at_zero,
        }
    });

    let entropy = spec.wants(Observable::NoonEntropy).then(|| EntropySummary {
        photon_numbers: spec.photon_numbers.clone(),
        exp_entropy: column_stats(records.iter().map(|r| r.exp_entropy.as_slice()), spec.photon_numbers.len()),
    });

    EnsembleSummary {
        kind: spec.lattice.kind,
        num_cells: spec.lattice.num_cells,
        master_seed: spec.master_seed,
        requested: spec.realizations,
        used: records.len(),
        failures,
        omega: spec.grid.omega().to_vec(),
        tau_c: spec.tau_c_grid.clone(),
        tau_zero_index: tau_zero,
        transmission,
        transmission_db,
        reflection,
        profile,
        delay,
        hom,
        noon,
        entropy,
        records: spec.keep_records.then_some(records),
    }
}

/// One row of a disorder sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderSweepRow {
    pub disorder_std: f64,
    pub seed: u64,
    /// `T(0)` statistics.
    pub transmission: Stat,
    /// `10·log₁₀ T(0)` statistics.
    pub transmission_db: Stat,
    pub excluded: usize,
}

/// Tag separating sweep seeds from the base ensemble's realization seeds.
const DISORDER_SWEEP_STREAM: u64 = 0x5745_4550_0000_0001;
const LENGTH_SWEEP_STREAM: u64 = 0x5745_4550_0000_0002;

/// Master seed of entry `k` of a sweep.
pub fn sweep_seed(master_seed: u64, stream: u64, k: usize) -> u64 {
    seed::derive_seed(seed::derive_seed(master_seed, stream), k as u64)
}

/// One ensemble per disorder strength, each with its own derived seed.
/// Only `T(0)` is computed, on a three-point grid with the ensemble grid's spacing.
pub fn disorder_sweep(spec: &EnsembleSpec, u_values: &[f64]) -> Result<Vec<DisorderSweepRow>> {
    if let Some(u) = u_values.iter().find(|u| !(u.is_finite() && **u >= 0.0)) {
        return Err(Error::invalid("u_values", format!("must be finite and >= 0, got {u}")));
    }
    let grid = FrequencyGrid::symmetric(spec.grid.spacing(), 3)?;
    u_values
        .iter()
        .enumerate()
        .map(|(k, &u)| {
            let seed = sweep_seed(spec.master_seed, DISORDER_SWEEP_STREAM, k);
            let sub = EnsembleSpec {
                lattice: spec.lattice.clone().with_disorder_std(u),
                master_seed: seed,
                keep_records: false,
                ..spec.clone()
            }
            .with_grid(grid.clone())?
            .with_observables([Observable::Transmission]);
            let summary = run_ensemble(&sub)?;
            Ok(DisorderSweepRow {
                disorder_std: u,
                seed,
                transmission: summary.transmission_at_zero().expect("requested"),
                transmission_db: summary.transmission_db_at_zero().expect("requested"),
                excluded: summary.failures.len(),
            })
        })
        .collect()
}

/// One row of a length sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthSweepRow {
    pub num_cells: usize,
    pub seed: u64,
    /// Per-realization minimum over the delay grid, then ensemble statistics.
    pub min_coincidence: Stat,
    /// Minimum over the delay grid of the ensemble-mean coincidence curve.
    pub min_of_mean: f64,
    pub excluded: usize,
}

/// One HOM ensemble per lattice length.
pub fn length_sweep(spec: &EnsembleSpec, lengths: &[usize]) -> Result<Vec<LengthSweepRow>> {
    if let Some(l) = lengths.iter().find(|&&l| l < 2) {
        return Err(Error::invalid("lengths", format!("must be at least 2, got {l}")));
    }
    lengths
        .iter()
        .enumerate()
        .map(|(k, &num_cells)| {
            let seed = sweep_seed(spec.master_seed, LENGTH_SWEEP_STREAM, k);
            let sub = EnsembleSpec {
                lattice: spec.lattice.clone().with_num_cells(num_cells),
                master_seed: seed,
                keep_records: false,
                ..spec.clone()
            }
            .with_observables([Observable::Hom]);
            let summary = run_ensemble(&sub)?;
            let hom = summary.hom.expect("requested");
            Ok(LengthSweepRow {
                num_cells,
                seed,
                min_coincidence: hom.min_coincidence,
                min_of_mean: hom.min_of_mean,
                excluded: summary.failures.len(),
            })
        })
        .collect()
}

/// Ensemble overlaps for a single realization pair, exposed for callers that
/// want the quantum observables of one spectrum pair outside an ensemble.
pub fn port_pair(spec: &EnsembleSpec, fs1: &FieldSpectrum, fs2: &FieldSpectrum) -> Result<(PortPair, Overlaps)> {
    let ports = PortPair::new(&spec.grid, spec.envelope.apply(&fs1.p_out), spec.envelope.apply(&fs2.p_out))?;
    let ov = ports.overlaps()?;
    Ok((ports, ov))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: LatticeKind) -> EnsembleSpec {
        let lattice = LatticeSpec::hcrow(6).with_kind(kind);
        EnsembleSpec::new(lattice)
            .with_realizations(12)
            .with_grid(FrequencyGrid::symmetric(4.0, 129).unwrap())
            .unwrap()
            .with_tau_grid(default_tau_grid(0.5, 21))
            .with_photon_numbers(vec![1, 2, 3])
    }

    #[test]
    fn clean_ensemble_has_no_spread() {
        for kind in [LatticeKind::HCrow, LatticeKind::RegularCrow] {
            let mut spec = small(kind).with_realizations(5);
            spec.lattice.disorder_std = 0.0;
            let s = run_ensemble(&spec).unwrap();
            for stats in [s.transmission.as_ref().unwrap(), s.hom.as_ref().unwrap().curve.as_ref()] {
                // The two channels are mirror images and agree to rounding.
                for st in stats {
                    let tol = 1e-12 * st.upper.abs().max(1e-300);
                    assert!(st.upper - st.lower <= tol && (st.mean - st.lower).abs() <= tol);
                }
            }
        }
    }

    #[test]
    fn summary_is_independent_of_thread_count() {
        let spec = small(LatticeKind::RegularCrow).with_records(true);
        let one = run_ensemble(&spec.clone().with_parallelism(Some(1))).unwrap();
        let four = run_ensemble(&spec.with_parallelism(Some(4))).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn realization_depends_only_on_master_seed_and_index() {
        let spec = small(LatticeKind::HCrow).with_records(true);
        let full = run_ensemble(&spec).unwrap().records.unwrap();
        let shorter = run_ensemble(&spec.clone().with_realizations(5)).unwrap().records.unwrap();
        assert_eq!(&full[..5], &shorter[..]);
        assert_eq!(full[3].seed, realization_seed(0, 3));
    }

    #[test]
    fn regular_crow_chains_draw_independent_disorder() {
        let spec = small(LatticeKind::RegularCrow).with_records(true);
        let recs = run_ensemble(&spec).unwrap().records.unwrap();
        assert!(recs.iter().all(|r| r.disorder_seeds.len() == 2 && r.disorder_seeds[0] != r.disorder_seeds[1]));
        assert!(recs.iter().any(|r| r.transmission[0] != r.transmission[1]));
    }

    #[test]
    fn histograms_and_bands_are_consistent() {
        let s = run_ensemble(&small(LatticeKind::RegularCrow)).unwrap();
        let noon = s.noon.unwrap();
        let h = noon.histogram_at_zero.unwrap();
        assert!((h.probability.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let d = s.delay.unwrap();
        assert!((d.histogram.probability.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for st in s.transmission_db.unwrap() {
            assert!(st.lower <= st.mean && st.mean <= st.upper);
        }
    }

    #[test]
    fn exclusion_budget_fails_the_run() {
        // No coupling and no loss: the clean three-site chain is singular at ω = 0.
        let mut spec = small(LatticeKind::RegularCrow);
        spec.lattice = LatticeSpec::regular_crow(3)
            .with_kappa_ex(0.0)
            .with_kappa_in(0.0)
            .with_disorder_std(0.0);
        let err = run_ensemble(&spec).unwrap_err();
        assert!(matches!(err, Error::ExclusionBudget { failed: 12, total: 12, .. }));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(run_ensemble(&small(LatticeKind::HCrow).with_realizations(0)).is_err());
        assert!(run_ensemble(&small(LatticeKind::HCrow).with_tau_grid(vec![])).is_err());
        assert!(run_ensemble(&small(LatticeKind::HCrow).with_photon_numbers(vec![0])).is_err());
        assert!(run_ensemble(&small(LatticeKind::HCrow).with_parallelism(Some(0))).is_err());
        assert!(disorder_sweep(&small(LatticeKind::HCrow), &[-0.1]).is_err());
        assert!(length_sweep(&small(LatticeKind::HCrow), &[1]).is_err());
    }

    #[test]
    fn sweep_zero_disorder_matches_clean_solve() {
        let spec = small(LatticeKind::HCrow);
        let rows = disorder_sweep(&spec, &[0.0, 0.8]).unwrap();
        let clean = spec.lattice.clone().with_disorder_std(0.0);
        let h = build_hamiltonian(&clean, Circulation::Ccw, None).unwrap();
        let fs = transport::solve_steady_state(&h, &clean, &spec.grid, Channel::One).unwrap();
        let t0 = transport::transmission(&fs)[spec.grid.zero_index()];
        assert!((rows[0].transmission.lower - t0).abs() < 1e-13 * t0);
        assert!((rows[0].transmission.upper - t0).abs() < 1e-13 * t0);
        assert_ne!(rows[0].seed, rows[1].seed);
    }

    #[test]
    fn clean_short_lattices_have_no_coincidence() {
        for kind in [LatticeKind::HCrow, LatticeKind::RegularCrow] {
            let mut spec = small(kind).with_realizations(2);
            spec.lattice.disorder_std = 0.0;
            let rows = length_sweep(&spec, &[2]).unwrap();
            assert!(rows[0].min_coincidence.mean < 1e-10, "{kind:?}: {}", rows[0].min_coincidence.mean);
        }
    }
}
