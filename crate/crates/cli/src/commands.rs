//! One function per subcommand. Each computes every table before anything is
//! written, so a failing run leaves no partial output.

use hcrow::ensemble::{disorder_sweep, length_sweep, run_ensemble, EnsembleSummary, Observable};
use hcrow::lattice::{band_structure, LatticeKind, Sublattice};
use hcrow::stats::{Histogram, Stat};
use hcrow::transport::to_db;

use crate::config::RunConfig;
use crate::output::{Table, Value};
use crate::{CliError, Command};

fn stat(s: &Stat) -> [Value; 4] {
    [s.mean.into(), s.std.into(), s.lower.into(), s.upper.into()]
}

/// Row of `x` followed by the statistics of each column group.
fn stat_row(x: Value, groups: &[&Stat]) -> Vec<Value> {
    let mut row = vec![x];
    for s in groups {
        row.extend(stat(s));
    }
    row
}

macro_rules! stat_columns {
    ($first:expr $(, $prefix:literal)*) => {
        &[$first $(, concat!($prefix, "_mean"), concat!($prefix, "_std"), concat!($prefix, "_lower"), concat!($prefix, "_upper"))*]
    };
}

fn table_name(stem: &str, kind: LatticeKind) -> String {
    format!("{stem}_{}", kind.name())
}

fn scalars(stem: &str, kind: LatticeKind, entries: Vec<(&str, Value)>) -> Table {
    let mut t = Table::new(table_name(stem, kind), &["quantity", "value"]);
    for (name, value) in entries {
        t.push(vec![name.into(), value]);
    }
    t
}

fn ensemble_counts(s: &EnsembleSummary) -> Vec<(&'static str, Value)> {
    vec![
        ("num_cells", s.num_cells.into()),
        ("realizations_requested", s.requested.into()),
        ("realizations_used", s.used.into()),
        ("realizations_excluded", s.failures.len().into()),
    ]
}

fn histogram_table(name: String, lower: &'static str, upper: &'static str, h: &Histogram) -> Table {
    let mut t = Table::new(name, &[lower, upper, "count", "probability"]);
    for (i, (&c, &p)) in h.counts.iter().zip(&h.probability).enumerate() {
        let (lo, hi) = h.bin_edges(i);
        t.push(vec![lo.into(), hi.into(), c.into(), p.into()]);
    }
    t
}

fn run_with(cfg: &RunConfig, kind: LatticeKind, observables: &[Observable]) -> Result<EnsembleSummary, CliError> {
    let spec = cfg.ensemble_spec(kind)?.with_observables(observables.iter().copied());
    Ok(run_ensemble(&spec)?)
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let mut tables = Vec::new();
    for &kind in &cfg.lattices {
        match cmd {
            Command::Band => tables.push(band(cfg, kind)?),
            Command::Transmit => tables.extend(transmit(cfg, kind)?),
            Command::Delay => tables.extend(delay(cfg, kind)?),
            Command::Hom => tables.extend(hom(cfg, kind)?),
            Command::Noon => tables.extend(noon(cfg, kind)?),
            Command::SweepDisorder => tables.push(sweep_disorder(cfg, kind)?),
            Command::SweepLength => tables.push(sweep_length(cfg, kind, "sweep_length")?),
        }
    }
    Ok(tables)
}

fn band(cfg: &RunConfig, kind: LatticeKind) -> Result<Table, CliError> {
    let bs = band_structure(&cfg.lattice_spec(kind)?, cfg.band.k_points)?;
    let mut t = Table::new(
        table_name("band", kind),
        &["k_rad", "omega_plus_over_J", "omega_minus_over_J", "v_plus_over_J", "v_minus_over_J"],
    );
    for i in 0..bs.k_grid.len() {
        t.push(vec![
            bs.k_grid[i].into(),
            bs.omega_plus[i].into(),
            bs.omega_minus.as_ref().map(|v| v[i]).into(),
            bs.v_plus[i].into(),
            bs.v_minus.as_ref().map(|v| v[i]).into(),
        ]);
    }
    Ok(t)
}

fn transmit(cfg: &RunConfig, kind: LatticeKind) -> Result<Vec<Table>, CliError> {
    let s = run_with(cfg, kind, &[Observable::Transmission, Observable::Reflection, Observable::Profile])?;
    let (t, t_db, r) = (
        s.transmission.as_ref().expect("requested"),
        s.transmission_db.as_ref().expect("requested"),
        s.reflection.as_ref().expect("requested"),
    );
    let mut spectra = Table::new(
        table_name("spectra", kind),
        stat_columns!("omega_over_J", "transmission", "transmission_db", "reflection"),
    );
    for (i, &w) in s.omega.iter().enumerate() {
        spectra.push(stat_row(w.into(), &[&t[i], &t_db[i], &r[i]]));
    }

    let lattice = cfg.lattice_spec(kind)?;
    let mut profile = Table::new(
        table_name("profile", kind),
        &["site", "cell", "sublattice", "intensity_mean", "intensity_std", "intensity_lower", "intensity_upper"],
    );
    for (site, st) in s.profile.as_ref().expect("requested").iter().enumerate() {
        let (cell, sub) = lattice.cell_of(site);
        let sub = match sub {
            Sublattice::A => "a",
            Sublattice::B => "b",
        };
        let mut row = vec![(site + 1).into(), (cell + 1).into(), sub.into()];
        row.extend(stat(st));
        profile.push(row);
    }

    let t0 = s.transmission_at_zero().expect("requested");
    let t0_db = s.transmission_db_at_zero().expect("requested");
    let mut entries = ensemble_counts(&s);
    entries.extend([
        ("t0_mean", t0.mean.into()),
        ("t0_std", t0.std.into()),
        ("t0_lower", t0.lower.into()),
        ("t0_upper", t0.upper.into()),
        ("t0_db_mean", t0_db.mean.into()),
        ("t0_db_std", t0_db.std.into()),
        ("t0_db_lower", t0_db.lower.into()),
        ("t0_db_upper", t0_db.upper.into()),
        ("t0_mean_in_db", to_db(t0.mean).into()),
    ]);
    Ok(vec![spectra, profile, scalars("transmit_scalars", kind, entries)])
}

fn delay(cfg: &RunConfig, kind: LatticeKind) -> Result<Vec<Table>, CliError> {
    let s = run_with(cfg, kind, &[Observable::Delay])?;
    let d = s.delay.as_ref().expect("requested");
    let mut spectra = Table::new(
        table_name("delay", kind),
        &[
            "omega_over_J",
            "tau_mean_times_J",
            "tau_std_times_J",
            "tau_lower_times_J",
            "tau_upper_times_J",
            "samples",
            "excluded",
        ],
    );
    for (i, &w) in s.omega.iter().enumerate() {
        let mut row = stat_row(w.into(), &[&d.per_omega[i]]);
        row.extend([d.per_omega[i].count.into(), d.excluded[i].into()]);
        spectra.push(row);
    }
    let hist = histogram_table(
        table_name("delay_hist", kind),
        "bin_lower_tau_times_J",
        "bin_upper_tau_times_J",
        &d.histogram,
    );
    let mut entries = ensemble_counts(&s);
    entries.extend([
        ("tau_rms_times_J", d.tau_rms.into()),
        ("tau0_mean_times_J", d.at_zero.mean.into()),
        ("tau0_std_times_J", d.at_zero.std.into()),
        ("tau0_lower_times_J", d.at_zero.lower.into()),
        ("tau0_upper_times_J", d.at_zero.upper.into()),
        ("tau0_variance_times_J2", d.variance_at_zero.into()),
        ("tau0_excluded", d.excluded[s.omega.len() / 2].into()),
    ]);
    Ok(vec![spectra, hist, scalars("delay_scalars", kind, entries)])
}

fn hom(cfg: &RunConfig, kind: LatticeKind) -> Result<Vec<Table>, CliError> {
    let s = run_with(cfg, kind, &[Observable::Hom])?;
    let h = s.hom.as_ref().expect("requested");
    let mut curve = Table::new(table_name("hom", kind), stat_columns!("tau_c_times_J", "coincidence"));
    for (tau, st) in s.tau_c.iter().zip(&h.curve) {
        curve.push(stat_row((*tau).into(), &[st]));
    }
    let mut entries = ensemble_counts(&s);
    entries.extend([
        ("min_coincidence_mean", h.min_coincidence.mean.into()),
        ("min_coincidence_std", h.min_coincidence.std.into()),
        ("min_coincidence_lower", h.min_coincidence.lower.into()),
        ("min_coincidence_upper", h.min_coincidence.upper.into()),
        ("min_of_mean_coincidence", h.min_of_mean.into()),
    ]);
    Ok(vec![
        curve,
        sweep_length(cfg, kind, "hom_length")?,
        scalars("hom_scalars", kind, entries),
    ])
}

fn noon(cfg: &RunConfig, kind: LatticeKind) -> Result<Vec<Table>, CliError> {
    let s = run_with(
        cfg,
        kind,
        &[Observable::NoonCoincidence, Observable::NoonPurity, Observable::NoonEntropy],
    )?;
    let n = s.noon.as_ref().expect("requested");
    let (coin, purity) = (n.coincidence.as_ref().expect("requested"), n.purity.as_ref().expect("requested"));
    let mut curve = Table::new(table_name("noon", kind), stat_columns!("tau_c_times_J", "coincidence", "purity"));
    for (i, tau) in s.tau_c.iter().enumerate() {
        curve.push(stat_row((*tau).into(), &[&coin[i], &purity[i]]));
    }
    let hist = histogram_table(
        table_name("noon_hist", kind),
        "bin_lower_coincidence",
        "bin_upper_coincidence",
        n.histogram_at_zero.as_ref().expect("requested"),
    );
    let e = s.entropy.as_ref().expect("requested");
    let mut entropy = Table::new(table_name("entropy", kind), stat_columns!("photon_number", "exp_entropy"));
    for (&num, st) in e.photon_numbers.iter().zip(&e.exp_entropy) {
        entropy.push(stat_row(num.into(), &[st]));
    }
    let z = s.tau_zero_index;
    let mut entries = ensemble_counts(&s);
    entries.extend([
        ("tau_c_at_zero_times_J", s.tau_c[z].into()),
        ("purity_at_zero_mean", purity[z].mean.into()),
        ("purity_at_zero_std", purity[z].std.into()),
        ("purity_at_zero_lower", purity[z].lower.into()),
        ("purity_at_zero_upper", purity[z].upper.into()),
        ("coincidence_at_zero_mean", coin[z].mean.into()),
        ("exp_entropy_n2_mean", s.mean_exp_entropy(2).into()),
    ]);
    Ok(vec![curve, hist, entropy, scalars("noon_scalars", kind, entries)])
}

fn sweep_disorder(cfg: &RunConfig, kind: LatticeKind) -> Result<Table, CliError> {
    let rows = disorder_sweep(&cfg.ensemble_spec(kind)?, &cfg.sweep.disorder)?;
    let mut t = Table::new(
        table_name("sweep_disorder", kind),
        &[
            "disorder_std_over_J",
            "t0_mean",
            "t0_std",
            "t0_lower",
            "t0_upper",
            "t0_db_mean",
            "t0_db_std",
            "t0_db_lower",
            "t0_db_upper",
            "seed",
            "excluded",
        ],
    );
    for r in rows {
        let mut row = stat_row(r.disorder_std.into(), &[&r.transmission, &r.transmission_db]);
        row.extend([r.seed.into(), r.excluded.into()]);
        t.push(row);
    }
    Ok(t)
}

fn sweep_length(cfg: &RunConfig, kind: LatticeKind, stem: &str) -> Result<Table, CliError> {
    let cells: Vec<usize> = cfg
        .sweep
        .lengths
        .iter()
        .map(|&l| cfg.cells(kind, l, "sweep.lengths"))
        .collect::<Result<_, _>>()?;
    let rows = length_sweep(&cfg.ensemble_spec(kind)?, &cells)?;
    let mut t = Table::new(
        table_name(stem, kind),
        &[
            "length",
            "num_cells",
            "min_coincidence_mean",
            "min_coincidence_std",
            "min_coincidence_lower",
            "min_coincidence_upper",
            "min_of_mean_coincidence",
            "seed",
            "excluded",
        ],
    );
    for (&length, r) in cfg.sweep.lengths.iter().zip(rows) {
        let mut row = vec![length.into(), r.num_cells.into()];
        row.extend(stat(&r.min_coincidence));
        row.extend([r.min_of_mean.into(), r.seed.into(), r.excluded.into()]);
        t.push(row);
    }
    Ok(t)
}
