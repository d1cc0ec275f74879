//! Run configuration: a strict TOML document plus command-line overrides.
//!
//! Every key is optional and falls back to the reference configuration
//! (`L = 20`, `U = 0.8J`, `κ_ex = 0.5J`, `κ_in = 0.1J`, 500 realizations).
//! Unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use hcrow::ensemble::{default_tau_grid, uniform_grid, EnsembleSpec};
use hcrow::lattice::{CouplingFootprint, LatticeKind, LatticeSpec};
use hcrow::transport::FrequencyGrid;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// How `lattice.length` and `sweep.lengths` count an H-CROW.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LengthConvention {
    /// Unit cells for an H-CROW (two rings each), rings for a regular CROW.
    #[default]
    Cells,
    /// Rings for both lattices.
    Sites,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub realizations: usize,
    pub parallel: Option<usize>,
    pub format: Format,
    pub out: PathBuf,
    pub length_convention: LengthConvention,
    pub lattices: Vec<LatticeKind>,
    pub lattice: LatticeSection,
    pub grid: GridSection,
    pub envelope: EnvelopeSection,
    pub tau_c: TauSection,
    pub band: BandSection,
    pub noon: NoonSection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            realizations: 500,
            parallel: None,
            format: Format::Csv,
            out: PathBuf::from("out"),
            length_convention: LengthConvention::Cells,
            lattices: vec![LatticeKind::HCrow, LatticeKind::RegularCrow],
            lattice: LatticeSection::default(),
            grid: GridSection::default(),
            envelope: EnvelopeSection::default(),
            tau_c: TauSection::default(),
            band: BandSection::default(),
            noon: NoonSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSection {
    pub length: usize,
    pub hopping: f64,
    pub kappa_ex: f64,
    pub kappa_in: f64,
    pub disorder_std: f64,
    pub footprint: CouplingFootprint,
    pub port_offset: usize,
}

impl Default for LatticeSection {
    fn default() -> Self {
        LatticeSection {
            length: 20,
            hopping: 1.0,
            kappa_ex: 0.5,
            kappa_in: 0.1,
            disorder_std: 0.8,
            footprint: CouplingFootprint::EdgeCell,
            port_offset: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub omega_max: f64,
    pub omega_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            omega_max: 4.0,
            omega_points: 513,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvelopeSection {
    pub sigma: f64,
}

impl Default for EnvelopeSection {
    fn default() -> Self {
        EnvelopeSection { sigma: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TauSection {
    /// Half-width of the controlled-delay grid; `10/σ` when absent.
    pub max: Option<f64>,
    pub points: usize,
}

impl Default for TauSection {
    fn default() -> Self {
        TauSection { max: None, points: 101 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandSection {
    pub k_points: usize,
}

impl Default for BandSection {
    fn default() -> Self {
        BandSection { k_points: 1001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoonSection {
    pub photon_numbers: Vec<u32>,
    pub histogram_bins: usize,
}

impl Default for NoonSection {
    fn default() -> Self {
        NoonSection {
            photon_numbers: (1..=10).collect(),
            histogram_bins: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub disorder: Vec<f64>,
    pub lengths: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            disorder: (0..=10).map(|i| i as f64 / 5.0).collect(),
            lengths: vec![10, 20, 30, 40],
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub parallel: Option<usize>,
    pub length_convention: Option<LengthConvention>,
}

fn config_error(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {reason}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(format) = o.format {
            self.format = format;
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if o.parallel.is_some() {
            self.parallel = o.parallel;
        }
        if let Some(c) = o.length_convention {
            self.length_convention = c;
        }
        self
    }

    /// Checks every field, naming the offending key on failure.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.realizations == 0 {
            return Err(config_error("realizations", "must be at least 1"));
        }
        if self.parallel == Some(0) {
            return Err(config_error("parallel", "must be at least 1"));
        }
        if self.lattices.is_empty() {
            return Err(config_error("lattices", "must name at least one lattice"));
        }
        if self.lattices.iter().collect::<BTreeSet<_>>().len() != self.lattices.len() {
            return Err(config_error("lattices", "must not repeat a lattice"));
        }

        let l = &self.lattice;
        if !(l.hopping.is_finite() && l.hopping > 0.0) {
            return Err(config_error("lattice.hopping", format!("must be finite and > 0, got {}", l.hopping)));
        }
        for (field, v) in [
            ("lattice.kappa_ex", l.kappa_ex),
            ("lattice.kappa_in", l.kappa_in),
            ("lattice.disorder_std", l.disorder_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(config_error(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        for &kind in &self.lattices {
            let cells = self.cells(kind, l.length, "lattice.length")?;
            if 2 * l.port_offset >= cells {
                return Err(config_error(
                    "lattice.port_offset",
                    format!("{} leaves no room between the ports of a {cells}-cell {}", l.port_offset, kind.name()),
                ));
            }
        }

        let g = &self.grid;
        if !(g.omega_max.is_finite() && g.omega_max > 0.0) {
            return Err(config_error("grid.omega_max", format!("must be finite and > 0, got {}", g.omega_max)));
        }
        if g.omega_points < 3 || g.omega_points % 2 == 0 {
            return Err(config_error("grid.omega_points", format!("must be odd and at least 3, got {}", g.omega_points)));
        }
        let sigma = self.envelope.sigma;
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(config_error("envelope.sigma", format!("must be finite and > 0, got {sigma}")));
        }
        if let Some(max) = self.tau_c.max {
            if !(max.is_finite() && max > 0.0) {
                return Err(config_error("tau_c.max", format!("must be finite and > 0, got {max}")));
            }
        }
        if self.tau_c.points == 0 {
            return Err(config_error("tau_c.points", "must be at least 1"));
        }
        if self.band.k_points < 2 {
            return Err(config_error("band.k_points", format!("must be at least 2, got {}", self.band.k_points)));
        }
        if self.noon.photon_numbers.is_empty() {
            return Err(config_error("noon.photon_numbers", "must not be empty"));
        }
        if self.noon.photon_numbers.contains(&0) {
            return Err(config_error("noon.photon_numbers", "entries must be at least 1"));
        }
        if self.noon.histogram_bins == 0 {
            return Err(config_error("noon.histogram_bins", "must be at least 1"));
        }
        if self.sweep.disorder.is_empty() {
            return Err(config_error("sweep.disorder", "must not be empty"));
        }
        if let Some(u) = self.sweep.disorder.iter().find(|u| !(u.is_finite() && **u >= 0.0)) {
            return Err(config_error("sweep.disorder", format!("entries must be finite and >= 0, got {u}")));
        }
        if self.sweep.lengths.is_empty() {
            return Err(config_error("sweep.lengths", "must not be empty"));
        }
        for &kind in &self.lattices {
            for &len in &self.sweep.lengths {
                let cells = self.cells(kind, len, "sweep.lengths")?;
                if cells < 2 {
                    return Err(config_error("sweep.lengths", format!("{len} gives fewer than 2 cells for {}", kind.name())));
                }
            }
        }
        Ok(())
    }

    /// Converts a configured length into the library's cell count.
    pub fn cells(&self, kind: LatticeKind, length: usize, field: &str) -> Result<usize, CliError> {
        let cells = match (self.length_convention, kind) {
            (LengthConvention::Sites, LatticeKind::HCrow) => {
                if length % 2 != 0 {
                    return Err(config_error(field, format!("{length} sites is not a whole number of H-CROW cells")));
                }
                length / 2
            }
            _ => length,
        };
        if cells == 0 {
            return Err(config_error(field, "must be at least 1"));
        }
        Ok(cells)
    }

    pub fn lattice_spec(&self, kind: LatticeKind) -> Result<LatticeSpec, CliError> {
        let l = &self.lattice;
        Ok(LatticeSpec {
            kind,
            num_cells: self.cells(kind, l.length, "lattice.length")?,
            hopping: l.hopping,
            kappa_ex: l.kappa_ex,
            kappa_in: l.kappa_in,
            disorder_std: l.disorder_std,
            footprint: l.footprint,
            port_offset: l.port_offset,
        })
    }

    pub fn grid(&self) -> Result<FrequencyGrid, CliError> {
        Ok(FrequencyGrid::symmetric(self.grid.omega_max, self.grid.omega_points)?)
    }

    pub fn tau_grid(&self) -> Vec<f64> {
        match self.tau_c.max {
            Some(max) => uniform_grid(max, self.tau_c.points),
            None => default_tau_grid(self.envelope.sigma, self.tau_c.points),
        }
    }

    pub fn ensemble_spec(&self, kind: LatticeKind) -> Result<EnsembleSpec, CliError> {
        let mut spec = EnsembleSpec::new(self.lattice_spec(kind)?)
            .with_realizations(self.realizations)
            .with_seed(self.seed)
            .with_grid(self.grid()?)?
            .with_sigma(self.envelope.sigma)?
            .with_tau_grid(self.tau_grid())
            .with_photon_numbers(self.noon.photon_numbers.clone())
            .with_parallelism(self.parallel);
        spec.histogram_bins = self.noon.histogram_bins;
        spec.validate()?;
        Ok(spec)
    }
}
