//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_4;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{close, integrate, quad_inner_product, quad_moment, quad_momentum_second_moment, quad_norm_sq};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeno_core::channel::{
    calibrate_unit_shift, decay_parameter, protected_survival_spectral, run_protected, run_unprotected,
    second_order_survival, ChannelRealization, DecayMode, ProbeState,
};
use zeno_core::detector::{DetectorGeometry, PixelProfile, DEFAULT_PIXEL_COUNT, DEFAULT_PIXEL_PITCH_UM};
use zeno_core::estimator::{beta_ci, l2_profile_estimate, moment_estimate, CandidateTable, EstimatorKind};
use zeno_core::experiment::{reconstruct_all, run_end_to_end, simulate, ExperimentSpec};
use zeno_core::noise_model::{Configuration, NoiseAlphabet};
use zeno_core::seeding::derive_seed;
use zeno_core::wavepacket::{Component, GaussianSum};

const SIGMA: f64 = 150.0;
const REFERENCE: [f64; 4] = [2.0, 2.0, 3.0, 3.0];
const FIG2: &str = "(2,0,2,2,0)";
const TARGET_SETS: [[f64; 5]; 3] = [
    [0.1, 0.3, 0.3, 0.2, 0.1],
    [0.2, 0.2, 0.2, 0.2, 0.2],
    [0.3, 0.4, 0.2, 0.1, 0.0],
];

type Check = Result<String, String>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn geometry() -> DetectorGeometry {
    DetectorGeometry::centered(DEFAULT_PIXEL_PITCH_UM, DEFAULT_PIXEL_COUNT).unwrap()
}

fn unit_shift() -> f64 {
    calibrate_unit_shift(ProbeState::diagonal(), SIGMA, &REFERENCE, 0.58)
        .unwrap()
        .unit_shift
}

fn survival_reproduction() -> Check {
    let c = calibrate_unit_shift(ProbeState::diagonal(), SIGMA, &REFERENCE, 0.58).map_err(|e| e.to_string())?;
    let fig2: Configuration = FIG2.parse().unwrap();
    let alphabet = NoiseAlphabet::equally_spaced(c.unit_shift, vec![0.2; 5]).unwrap();
    let r = fig2.realization(&alphabet).unwrap();
    let prot = run_protected(ProbeState::diagonal(), SIGMA, &r).unwrap().total_survival;
    let unprot = run_unprotected(ProbeState::diagonal(), SIGMA, &r).unwrap();
    ensure((prot - 0.58).abs() < 1e-9, || format!("protected {prot}"))?;
    ensure((unprot - 0.50).abs() <= 0.01, || format!("unprotected {unprot}"))?;
    Ok(format!(
        "g/sigma={:.4}, protected={prot:.4}, unprotected={unprot:.4}",
        c.shift_over_sigma
    ))
}

fn configuration_recovery() -> Check {
    let alphabet = NoiseAlphabet::equally_spaced(unit_shift(), vec![0.2; 5]).unwrap();
    let truth: Configuration = FIG2.parse().unwrap();
    let table = CandidateTable::build(&alphabet, ProbeState::diagonal(), SIGMA, 6).unwrap();
    let spec = ExperimentSpec {
        probe: ProbeState::diagonal(),
        sigma: SIGMA,
        alphabet,
        events: 6,
        trials: 100,
        photons: 1_000_000,
        geometry: geometry(),
        seed: 20_240_601,
        forced: Some(truth.clone()),
    };
    let histograms: Vec<_> = simulate(&spec).unwrap().into_iter().map(|o| o.histogram).collect();
    let mut detail = Vec::new();
    let mut ok = true;
    for kind in [EstimatorKind::L2, EstimatorKind::Moments] {
        let recon = reconstruct_all(&histograms, &table, kind, None).unwrap();
        let hits = recon.iter().filter(|r| r.configuration == truth).count();
        ok &= hits >= 90;
        detail.push(format!("{kind} {hits}/100"));
    }
    let detail = detail.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ci_table() -> Check {
    let a = beta_ci(7, 60, 0.68).unwrap();
    let b = beta_ci(23, 60, 0.68).unwrap();
    let z = beta_ci(0, 60, 0.95).unwrap();
    let detail = format!(
        "7/60@68%=({:.3};{:.3}) 23/60@68%=({:.3};{:.3}) 0/60@95% upper {:.3}",
        a.lower, a.upper, b.lower, b.upper, z.upper
    );
    let ok = (a.lower - 0.087).abs() <= 0.010
        && (a.upper - 0.171).abs() <= 0.010
        && (b.lower - 0.326).abs() <= 0.010
        && (b.upper - 0.449).abs() <= 0.010
        && (z.upper - 0.059).abs() <= 0.005;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn distribution_convergence() -> Check {
    let g = unit_shift();
    let replications = 200;
    let mut detail = Vec::new();
    let mut ok = true;
    for (set, targets) in TARGET_SETS.iter().enumerate() {
        let alphabet = NoiseAlphabet::equally_spaced(g, targets.to_vec()).unwrap();
        let table = CandidateTable::build(&alphabet, ProbeState::diagonal(), SIGMA, 6).unwrap();
        let spec = |seed: u64| ExperimentSpec {
            probe: ProbeState::diagonal(),
            sigma: SIGMA,
            alphabet: alphabet.clone(),
            events: 6,
            trials: 10,
            photons: 1_000_000,
            geometry: geometry(),
            seed,
            forced: None,
        };
        let set_seed = derive_seed(0x5eed_0004, set as u64);
        let (_, report) = run_end_to_end(&spec(set_seed), &table, EstimatorKind::Moments).unwrap();
        let inside = targets.iter().zip(&report.ci95).all(|(p, ci)| ci.contains(*p));
        ok &= inside;

        let mut covered = [0usize; 5];
        for rep in 0..replications {
            let seed = derive_seed(set_seed, 1 + rep as u64);
            let (_, report) = run_end_to_end(&spec(seed), &table, EstimatorKind::Moments).unwrap();
            for (k, ci) in report.ci95.iter().enumerate() {
                covered[k] += ci.contains(targets[k]) as usize;
            }
        }
        let coverage: Vec<f64> = covered.iter().map(|&c| c as f64 / replications as f64).collect();
        ok &= coverage.iter().all(|&c| c >= 0.9);
        detail.push(format!(
            "set {}: L=10 run {} p_R={:?}; coverage {:?}",
            set + 1,
            if inside { "inside" } else { "OUTSIDE" },
            report_rounded(&report.p_r),
            report_rounded(&coverage)
        ));
    }
    let detail = detail.join(" | ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn report_rounded(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1000.0).round() / 1000.0).collect()
}

fn qze_scaling() -> Check {
    let probe = ProbeState::diagonal();
    for n in 1..=100usize {
        let r = ChannelRealization::new(vec![0.3 * SIGMA; n]).unwrap();
        let j_n = decay_parameter(probe, SIGMA, &r, DecayMode::FixedBath).unwrap();
        let j_1 = decay_parameter(probe, SIGMA, &r, DecayMode::SingleMeasurement).unwrap();
        let ratio = j_n / j_1;
        ensure((ratio * n as f64 - 1.0).abs() < 1e-12, || {
            format!("N={n}: J_N/J_1={ratio}")
        })?;
    }
    let total = 3.0 * SIGMA;
    let mut previous_p = 0.0;
    let mut previous_ratio = f64::INFINITY;
    for n in 1..=100usize {
        let r = ChannelRealization::new(vec![total / n as f64; n]).unwrap();
        let p = protected_survival_spectral(probe, SIGMA, &r).unwrap();
        let u = run_unprotected(probe, SIGMA, &r).unwrap();
        let ratio = p.ln() / u.ln();
        if n > 1 {
            ensure(p > previous_p && ratio < previous_ratio, || {
                format!("N={n}: survival {p} after {previous_p}, ratio {ratio} after {previous_ratio}")
            })?;
        }
        previous_p = p;
        previous_ratio = ratio;
    }
    Ok(format!(
        "J_N/J_1 = 1/N for N<=100; fixed G=3 sigma: ln-ratio falls to {previous_ratio:.4}, survival rises to {previous_p:.4}"
    ))
}

fn random_state(rng: &mut ChaCha8Rng) -> GaussianSum {
    let sigma = rng.random_range(0.3..2.0);
    let m = rng.random_range(2..=12);
    let components = (0..m)
        .map(|_| {
            Component::new(
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                rng.random_range(-6.0..6.0) * sigma,
            )
        })
        .collect();
    GaussianSum::from_components(sigma, components).unwrap()
}

fn analytics_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    while checked < 100 {
        let s = random_state(&mut rng);
        if s.norm_sq() < 1e-3 {
            continue;
        }
        let other = GaussianSum::from_components(s.sigma(), random_state(&mut rng).components().to_vec()).unwrap();
        let qn = quad_norm_sq(&s);
        let pairs = [
            ("norm", s.norm_sq(), qn),
            ("mean", s.moment(1).unwrap(), quad_moment(&s, 1)),
            ("second moment", s.moment(2).unwrap(), quad_moment(&s, 2)),
            (
                "<P^2>",
                s.momentum_second_moment().unwrap(),
                quad_momentum_second_moment(&s),
            ),
        ];
        for (what, closed, quad) in pairs {
            ensure(close(closed, quad, 1e-10), || {
                format!("state {checked} {what}: {closed} vs {quad}")
            })?;
        }
        let ip = s.inner_product(&other).unwrap();
        let qip = quad_inner_product(&s, &other);
        ensure(close(ip.re, qip.re, 1e-10) && close(ip.im, qip.im, 1e-10), || {
            format!("state {checked} overlap: {ip} vs {qip}")
        })?;
        let (lo, hi) = s.center_range();
        for i in 0..5 {
            let x = lo - s.sigma() + i as f64 * (hi - lo + 2.0 * s.sigma()) / 4.0;
            let closed = s.density_at(x).unwrap();
            let quad = s.amplitude_at(x).norm_sqr() / qn;
            ensure(close(closed, quad, 1e-10), || format!("state {checked} density at {x}"))?;
        }
        let total = integrate(
            |x| s.density_at(x).unwrap(),
            lo - 10.0 * s.sigma(),
            hi + 10.0 * s.sigma(),
            1e-13,
        );
        ensure((total - 1.0).abs() < 1e-10, || {
            format!("state {checked} density mass {total}")
        })?;
        checked += 1;
    }

    let residual = |g: f64| {
        let r = ChannelRealization::new(vec![g]).unwrap();
        let exact = run_unprotected(ProbeState::diagonal(), 1.0, &r).unwrap();
        (exact - second_order_survival(ProbeState::diagonal(), 1.0, g).unwrap()).abs()
    };
    let mut ratios = Vec::new();
    for g in [0.4, 0.2, 0.1] {
        let ratio = residual(g) / residual(g / 2.0);
        ensure((ratio / 16.0 - 1.0).abs() <= 0.1, || {
            format!("residual ratio {ratio} at G={g}")
        })?;
        ratios.push(ratio);
    }

    let mut runs = 0;
    for _ in 0..500 {
        let theta = rng.random_range(0.01..FRAC_PI_4 * 2.0 - 0.01);
        let n = rng.random_range(2..=10);
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..4.0)).collect();
        let run = run_protected(
            ProbeState::new(theta).unwrap(),
            1.0,
            &ChannelRealization::new(g.clone()).unwrap(),
        )
        .unwrap();
        let b = &run.momentum_second_moments;
        ensure(b.windows(2).all(|w| w[1] < w[0]), || {
            format!("B^2 not decreasing for theta={theta} g={g:?}: {b:?}")
        })?;
        runs += 1;
    }
    let alphabet = NoiseAlphabet::equally_spaced(unit_shift(), vec![0.2; 5]).unwrap();
    for c in zeno_core::noise_model::enumerate_configurations(5, 6) {
        if c.counts()[0] > 0 {
            continue;
        }
        let run = run_protected(ProbeState::diagonal(), SIGMA, &c.realization(&alphabet).unwrap()).unwrap();
        let b = &run.momentum_second_moments;
        ensure(b.windows(2).all(|w| w[1] < w[0]), || {
            format!("B^2 not decreasing for {c}")
        })?;
        runs += 1;
    }
    Ok(format!(
        "100 states within 1e-10; residual ratios {:?}; {runs} runs strictly cooling",
        report_rounded(&ratios)
    ))
}

/// Composite Simpson quadrature of every candidate density on one fine grid.
struct GridOracle {
    step: f64,
    xs: Vec<f64>,
    pdfs: Vec<Vec<f64>>,
}

impl GridOracle {
    fn new(table: &CandidateTable) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in 0..table.len() {
            let (a, b) = table.density(c).mixture().support(12.0);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        let intervals = (((hi - lo) / (table.sigma() / 40.0)).ceil() as usize + 1) & !1;
        let step = (hi - lo) / intervals as f64;
        let xs: Vec<f64> = (0..=intervals).map(|i| lo + i as f64 * step).collect();
        let pdfs = (0..table.len())
            .map(|c| xs.iter().map(|&x| table.density(c).pdf(x)).collect())
            .collect();
        Self { step, xs, pdfs }
    }

    fn simpson(&self, f: impl Fn(usize) -> f64) -> f64 {
        let last = self.xs.len() - 1;
        let sum: f64 = (0..=last)
            .map(|i| {
                let w = if i == 0 || i == last {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * f(i)
            })
            .sum();
        sum * self.step / 3.0
    }

    fn distance(&self, a: usize, b: usize) -> f64 {
        self.simpson(|i| (self.pdfs[a][i] - self.pdfs[b][i]).powi(2))
    }

    fn mean_variance(&self, c: usize) -> (f64, f64) {
        let mean = self.simpson(|i| self.xs[i] * self.pdfs[c][i]);
        let var = self.simpson(|i| (self.xs[i] - mean).powi(2) * self.pdfs[c][i]);
        (mean, var)
    }
}

fn oracle_equivalence_for(probe: ProbeState) -> Result<(usize, usize), String> {
    let alphabet = NoiseAlphabet::equally_spaced(unit_shift(), vec![0.2; 5]).unwrap();
    let table = CandidateTable::build(&alphabet, probe, SIGMA, 6).unwrap();
    let oracle = GridOracle::new(&table);
    let n = table.len();
    let moments: Vec<(f64, f64)> = (0..n).map(|c| oracle.mean_variance(c)).collect();
    let collide = |a: usize, b: usize| {
        (moments[a].0 - moments[b].0).abs() <= 1e-7 * SIGMA
            && (moments[a].1 - moments[b].1).abs() <= 1e-7 * SIGMA * SIGMA
    };
    let group_of = |t: usize| -> BTreeSet<usize> { (0..n).filter(|&c| collide(t, c)).collect() };

    let mut unique = 0;
    let mut degenerate = 0;
    for truth in 0..n {
        let name = &table.configurations()[truth];
        let profile = PixelProfile::from_density(table.density(truth), geometry()).unwrap();
        let distances: Vec<f64> = (0..n).map(|c| oracle.distance(truth, c)).collect();
        let scale = oracle.simpson(|i| oracle.pdfs[truth][i].powi(2));
        let min = distances.iter().cloned().fold(f64::INFINITY, f64::min);
        let ties: BTreeSet<usize> = (0..n).filter(|&c| distances[c] <= min + 1e-12 * scale).collect();
        let oracle_winner = *ties.iter().next().unwrap();
        let group = group_of(truth);
        ensure(ties == group, || {
            format!("{name}: oracle ties {ties:?} vs moment group {group:?}")
        })?;

        let l2 = l2_profile_estimate(&profile, &table).map_err(|e| e.to_string())?;
        let mo = moment_estimate(&profile, &table, None).map_err(|e| e.to_string())?;
        ensure(l2.index == oracle_winner, || {
            format!("{name}: L2 chose {} vs oracle {oracle_winner}", l2.index)
        })?;
        ensure(mo.index == oracle_winner, || {
            format!("{name}: moments chose {} vs oracle {oracle_winner}", mo.index)
        })?;
        let mut flagged: BTreeSet<usize> = mo.degenerate_with.iter().map(|c| table.index_of(c).unwrap()).collect();
        flagged.insert(mo.index);
        ensure(flagged == group, || {
            format!("{name}: flagged {flagged:?} vs oracle group {group:?}")
        })?;
        if group.len() == 1 {
            ensure(mo.index == truth, || format!("{name}: unique truth not recovered"))?;
            unique += 1;
        } else {
            degenerate += 1;
        }
    }
    Ok((unique, degenerate))
}

fn oracle_equivalence() -> Check {
    let (u, d) = oracle_equivalence_for(ProbeState::diagonal())?;
    ensure(u == 210 && d == 0, || {
        format!("diagonal probe: {u} unique, {d} degenerate")
    })?;
    let (u0, d0) = oracle_equivalence_for(ProbeState::new(0.0).unwrap())?;
    ensure(d0 > 0, || "horizontal probe produced no degenerate groups".into())?;
    Ok(format!(
        "diagonal probe: {u}/210 unique and recovered; horizontal probe: {u0} unique, {d0} in flagged groups"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Check); 7] = [
        ("survival reproduction", 1, survival_reproduction),
        ("configuration recovery", 120, configuration_recovery),
        ("CI table reproduction", 1, ci_table),
        ("distribution convergence", 1800, distribution_convergence),
        ("QZE scaling", 10, qze_scaling),
        ("analytics oracle suite", 60, analytics_oracles),
        ("exhaustive-oracle estimator equivalence", 300, oracle_equivalence),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| f == &id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let (pass, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        failures += (!pass) as usize;
        println!(
            "{} criterion {id} {name} [{:.2} s of {budget} s{}]: {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
