use hcrow::lattice::{build_hamiltonian, sample_disorder, Circulation, CouplingFootprint, LatticeKind, LatticeSpec, Sublattice};
use hcrow::transport::{
    group_delay, intensity_profile, reflection, solve_steady_state, solve_steady_state_with, total_reflection,
    total_transmission, transmission, Channel, FieldSpectrum, FrequencyGrid, PortLayout, SolverBackend,
};
use hcrow::Complex64;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn solve(spec: &LatticeSpec, grid: &FrequencyGrid, channel: Channel, seed: Option<u64>) -> FieldSpectrum {
    let circ = match (spec.kind, channel) {
        (LatticeKind::HCrow, Channel::Two) => Circulation::Cw,
        _ => Circulation::Ccw,
    };
    let d = seed.map(|s| sample_disorder(spec, s));
    let h = build_hamiltonian(spec, circ, d.as_ref()).unwrap();
    solve_steady_state(&h, spec, grid, channel).unwrap()
}

/// Clean, lossless, impedance-matched: a single lead on the drive and the
/// readout site with κ_ex equal to the band-centre group velocity.
fn matched(kind: LatticeKind, n: usize) -> LatticeSpec {
    let base = match kind {
        LatticeKind::HCrow => LatticeSpec::hcrow(n).with_kappa_ex(4.0),
        LatticeKind::RegularCrow => LatticeSpec::regular_crow(n).with_kappa_ex(1.0),
    };
    base.with_kappa_in(0.0)
        .with_disorder_std(0.0)
        .with_footprint(CouplingFootprint::DriveReadout)
}

#[test]
fn lossless_disordered_lattices_conserve_flux() {
    let grid = FrequencyGrid::symmetric(4.0, 129).unwrap();
    for (i, base) in [LatticeSpec::hcrow(20), LatticeSpec::regular_crow(20)].into_iter().enumerate() {
        for footprint in [CouplingFootprint::EdgeCell, CouplingFootprint::DriveReadout] {
            let spec = base.clone().with_kappa_in(0.0).with_footprint(footprint);
            for seed in 0..10u64 {
                for ch in [Channel::One, Channel::Two] {
                    let fs = solve(&spec, &grid, ch, Some(1000 * i as u64 + seed));
                    let (rt, tt) = (total_reflection(&fs), total_transmission(&fs));
                    let (r, t) = (reflection(&fs), transmission(&fs));
                    for w in 0..grid.len() {
                        assert!((rt[w] + tt[w] - 1.0).abs() < 1e-8, "{:?} {footprint:?} seed {seed}", spec.kind);
                        assert!(r[w] + t[w] <= 1.0 + 1e-8);
                        let single_port = spec.kind == LatticeKind::RegularCrow || footprint == CouplingFootprint::DriveReadout;
                        if single_port {
                            assert!((r[w] + t[w] - 1.0).abs() < 1e-8);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn clean_hcrow_channels_are_reciprocal() {
    let grid = FrequencyGrid::default();
    for footprint in [CouplingFootprint::EdgeCell, CouplingFootprint::DriveReadout] {
        let spec = LatticeSpec::hcrow(20).with_disorder_std(0.0).with_footprint(footprint);
        let one = solve(&spec, &grid, Channel::One, None);
        let two = solve(&spec, &grid, Channel::Two, None);
        for (a, b) in one.p_out.iter().zip(&two.p_out) {
            assert!((a.norm() - b.norm()).abs() < 1e-10);
        }
    }
}

/// Independent dense solve of `(−iω + iH + K) x = c·√(2κ_ex)·e_drive`.
fn dense_reference(spec: &LatticeSpec, h: &DMatrix<Complex64>, channel: Channel, omega: f64, c: Complex64) -> DVector<Complex64> {
    let layout = PortLayout::new(spec, channel);
    let n = spec.dim();
    let i = Complex64::new(0.0, 1.0);
    let mut m = h.map(|x| i * x);
    for s in 0..n {
        m[(s, s)] += Complex64::new(spec.kappa_in, -omega);
    }
    for lead in &layout.leads {
        m[(lead.site, lead.site)] += spec.kappa_ex;
    }
    let mut rhs = DVector::zeros(n);
    rhs[layout.drive_site] = c * (2.0 * spec.kappa_ex).sqrt();
    m.lu().solve(&rhs).unwrap()
}

#[test]
fn response_is_linear_in_the_drive() {
    let grid = FrequencyGrid::symmetric(3.0, 31).unwrap();
    let spec = LatticeSpec::hcrow(6);
    let d = sample_disorder(&spec, 9);
    let h = build_hamiltonian(&spec, Circulation::Ccw, Some(&d)).unwrap();
    let fs = solve_steady_state(&h, &spec, &grid, Channel::One).unwrap();
    let c = Complex64::new(-0.4, 1.7);
    let scaled = fs.scaled(c);
    let dense = h.to_dense();
    for (w, &omega) in grid.omega().iter().enumerate() {
        let x = dense_reference(&spec, &dense, Channel::One, omega, c);
        for (a, b) in scaled.fields_at(w).iter().zip(x.iter()) {
            assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
        }
        let readout = PortLayout::new(&spec, Channel::One).readout_site;
        let p = -(2.0 * spec.kappa_ex).sqrt() * x[readout];
        assert!((scaled.p_out[w] - p).norm() <= 1e-12 * (1.0 + p.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn banded_and_dense_solvers_agree(
        regular in any::<bool>(),
        cells in 1usize..=8,
        seed in any::<u64>(),
        kappa_ex in 0.05f64..2.0,
        kappa_in in 0.0f64..0.5,
        u in 0.0f64..2.0,
        drive_readout in any::<bool>(),
        two in any::<bool>(),
    ) {
        let kind = if regular { LatticeKind::RegularCrow } else { LatticeKind::HCrow };
        let footprint = if drive_readout { CouplingFootprint::DriveReadout } else { CouplingFootprint::EdgeCell };
        let spec = LatticeSpec::hcrow(cells)
            .with_kind(kind)
            .with_kappa_ex(kappa_ex)
            .with_kappa_in(kappa_in)
            .with_disorder_std(u)
            .with_footprint(footprint);
        let channel = if two { Channel::Two } else { Channel::One };
        let circ = if two && kind == LatticeKind::HCrow { Circulation::Cw } else { Circulation::Ccw };
        let d = sample_disorder(&spec, seed);
        let h = build_hamiltonian(&spec, circ, Some(&d)).unwrap();
        let grid = FrequencyGrid::symmetric(3.5, 15).unwrap();
        let banded = solve_steady_state_with(&h, &spec, &grid, channel, SolverBackend::Banded).unwrap();
        let dense = solve_steady_state_with(&h, &spec, &grid, channel, SolverBackend::Dense).unwrap();
        for w in 0..grid.len() {
            for (a, b) in banded.fields_at(w).iter().zip(dense.fields_at(w)) {
                prop_assert!((a - b).norm() <= 1e-10 * (1.0 + b.norm()));
            }
        }
    }
}

#[test]
fn matched_clean_delay_is_the_ballistic_time_of_flight() {
    let grid = FrequencyGrid::default();
    for kind in [LatticeKind::HCrow, LatticeKind::RegularCrow] {
        let spec = matched(kind, 20);
        let fs = solve(&spec, &grid, Channel::One, None);
        let tau = group_delay(&fs).at(grid.zero_index()).unwrap();
        let expected = 19.0 / 2.0;
        assert!((tau - expected).abs() < 0.15 * expected, "{kind:?}: tau(0) = {tau}");
    }
}

#[test]
fn delay_converges_under_grid_refinement() {
    let coarse = FrequencyGrid::default();
    let fine = FrequencyGrid::symmetric(4.0, 2 * coarse.len() - 1).unwrap();
    for spec in [
        LatticeSpec::hcrow(20).with_disorder_std(0.0),
        LatticeSpec::regular_crow(20).with_disorder_std(0.0),
        matched(LatticeKind::HCrow, 20),
    ] {
        let a = group_delay(&solve(&spec, &coarse, Channel::One, None)).at(coarse.zero_index()).unwrap();
        let b = group_delay(&solve(&spec, &fine, Channel::One, None)).at(fine.zero_index()).unwrap();
        assert!(((a - b) / b).abs() < 5e-3, "{:?}: {a} vs {b}", spec.kind);
    }
}

#[test]
fn clean_lossless_hcrow_profile_is_flat_and_on_one_sublattice() {
    let grid = FrequencyGrid::default();
    let spec = matched(LatticeKind::HCrow, 20);
    for (channel, driven) in [(Channel::One, Sublattice::A), (Channel::Two, Sublattice::B)] {
        let fs = solve(&spec, &grid, channel, None);
        let profile = intensity_profile(&fs, 0.0).unwrap();
        let other = match driven {
            Sublattice::A => Sublattice::B,
            Sublattice::B => Sublattice::A,
        };
        let interior = 1..spec.num_cells - 1;
        let on: Vec<f64> = interior.clone().map(|c| profile[spec.site(c, driven)]).collect();
        let off: f64 = interior.map(|c| profile[spec.site(c, other)]).sum();
        let (lo, hi) = on.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        assert!((hi - lo) / hi < 1e-6, "variation {}", (hi - lo) / hi);
        assert!(off < 1e-6 * on.iter().sum::<f64>(), "off-sublattice {off}");
    }
}

/// Least-squares slope of `y` against its index.
fn slope(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = y.iter().sum::<f64>() / n;
    let sxy: f64 = y.iter().enumerate().map(|(i, v)| (i as f64 - xm) * (v - ym)).sum();
    let sxx: f64 = (0..y.len()).map(|i| (i as f64 - xm).powi(2)).sum();
    let b = sxy / sxx;
    let ss_res: f64 = y.iter().enumerate().map(|(i, v)| (v - ym - b * (i as f64 - xm)).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - ym).powi(2)).sum();
    (b, 1.0 - ss_res / ss_tot)
}

#[test]
fn lossy_profile_decays_exponentially_at_rate_set_by_loss() {
    let grid = FrequencyGrid::default();
    let kappa_in = 0.1;
    let spec = matched(LatticeKind::HCrow, 20).with_kappa_in(kappa_in);
    let fs = solve(&spec, &grid, Channel::One, None);
    let profile = intensity_profile(&fs, 0.0).unwrap();
    let log_a: Vec<f64> = (1..spec.num_cells - 1).map(|c| profile[spec.site(c, Sublattice::A)].ln()).collect();
    let (b, r2) = slope(&log_a);
    // Intensity decays as exp(−2κ_in·n/v_g) with v_g = 2J per cell.
    let expected = -2.0 * kappa_in / 2.0;
    assert!((b - expected).abs() < 0.05 * expected.abs(), "slope {b}");
    assert!(r2 > 0.999, "r² {r2}");
}

#[test]
fn disordered_regular_crow_attenuates_faster_than_hcrow() {
    let grid = FrequencyGrid::symmetric(1.0, 3).unwrap();
    let attenuation = |spec: LatticeSpec| {
        let n = spec.num_cells;
        let mut mean = vec![0.0; spec.dim()];
        for seed in 0..200 {
            let p = intensity_profile(&solve(&spec, &grid, Channel::One, Some(seed)), 0.0).unwrap();
            mean.iter_mut().zip(&p).for_each(|(m, x)| *m += x);
        }
        (mean[spec.site(n - 1, Sublattice::A)] / mean[spec.site(0, Sublattice::A)]).ln()
    };
    let h = attenuation(LatticeSpec::hcrow(20));
    let r = attenuation(LatticeSpec::regular_crow(20));
    assert!(r < h, "regular {r} vs helical {h}");
}

#[test]
fn transmission_falls_monotonically_with_loss() {
    let grid = FrequencyGrid::symmetric(1.0, 3).unwrap();
    for base in [LatticeSpec::hcrow(20), LatticeSpec::regular_crow(20)] {
        let t0: Vec<f64> = [0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0]
            .iter()
            .map(|&k| transmission(&solve(&base.clone().with_disorder_std(0.0).with_kappa_in(k), &grid, Channel::One, None))[1])
            .collect();
        assert!(t0.windows(2).all(|w| w[1] < w[0]), "{t0:?}");
        assert!(*t0.last().unwrap() < 1e-6);
    }
}

#[test]
fn single_ring_reflects_nothing_on_resonance() {
    let spec = LatticeSpec::regular_crow(1).with_kappa_in(0.0).with_disorder_std(0.0);
    let grid = FrequencyGrid::default();
    let fs = solve(&spec, &grid, Channel::One, None);
    let w = grid.zero_index();
    assert!(reflection(&fs)[w] < 1e-24);
    assert!((transmission(&fs)[w] - 1.0).abs() < 1e-12);
}
