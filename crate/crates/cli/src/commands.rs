use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use zeno_core::channel::{qze_scaling_report, Calibration, CouplingSampler, ScalingReport};
use zeno_core::detector::{read_histogram_csv, write_histogram_csv, SpatialHistogram, TheoreticalDensity};
use zeno_core::estimator::{build_report, CandidateTable, EstimateReport, EstimatorKind, Reconstruction};
use zeno_core::experiment::{reconstruct_all, simulate_trial, trial_seed, TrialOutput};
use zeno_core::noise_model::Configuration;
use zeno_core::seeding::{derive_seed, PHOTON_STREAM, REALIZATION_STREAM};

use crate::artifacts::Artifacts;
use crate::config::{ExperimentConfig, Resolved};
use crate::plot::{self, Band, Panel, Series, Style, PALETTE};

/// Seeds of the canned recipes.
pub const FIG2_SEED: u64 = 2;
pub const FIG3_SEEDS: [u64; 3] = [31, 32, 33];
pub const SCALING_SEED: u64 = 5;
pub const FIG3_TARGETS: [[f64; 5]; 3] = [
    [0.1, 0.3, 0.3, 0.2, 0.1],
    [0.2, 0.2, 0.2, 0.2, 0.2],
    [0.3, 0.4, 0.2, 0.1, 0.0],
];
pub const SCALING_EVENTS: [usize; 12] = [1, 2, 3, 4, 6, 8, 12, 16, 25, 40, 63, 100];

#[derive(Serialize)]
struct TrialRecord<'a> {
    trial: usize,
    seed: u64,
    realization_seed: u64,
    photon_seed: u64,
    configuration: &'a Configuration,
    event_indices: &'a [usize],
    couplings_um: Vec<f64>,
    protected_survival: f64,
    conditional_survivals: &'a [f64],
    momentum_second_moments: &'a [f64],
    unprotected_survival: f64,
    detected_photons: u64,
    overflow: u64,
    histogram: String,
}

#[derive(Serialize)]
struct RunsFile<'a> {
    theta: f64,
    sigma_um: f64,
    unit_shift_um: f64,
    calibration: Option<&'a Calibration>,
    trials: Vec<TrialRecord<'a>>,
}

#[derive(Serialize)]
struct SeedEntry {
    trial: usize,
    seed: u64,
    realization_seed: u64,
    photon_seed: u64,
}

fn seed_entries(master: u64, trials: usize) -> Vec<SeedEntry> {
    (0..trials)
        .map(|t| {
            let seed = trial_seed(master, t);
            SeedEntry {
                trial: t,
                seed,
                realization_seed: derive_seed(seed, REALIZATION_STREAM),
                photon_seed: derive_seed(seed, PHOTON_STREAM),
            }
        })
        .collect()
}

fn histogram_name(trial: usize) -> String {
    format!("histograms/trial_{trial:03}.csv")
}

fn csv_bytes(hist: &SpatialHistogram) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_histogram_csv(hist, &mut buf)?;
    Ok(buf)
}

/// Runs every trial (in parallel) and returns them in trial order.
fn run_trials(resolved: &Resolved) -> Vec<Result<TrialOutput>> {
    let spec = resolved.spec();
    (0..spec.trials)
        .into_par_iter()
        .map(|t| simulate_trial(&spec, t).with_context(|| format!("trial {t} failed")))
        .collect()
}

fn write_trials(artifacts: &mut Artifacts, resolved: &Resolved, outputs: &[&TrialOutput]) -> Result<()> {
    let mut records = Vec::with_capacity(outputs.len());
    for o in outputs {
        let name = histogram_name(o.trial);
        artifacts.write(&name, &csv_bytes(&o.histogram)?)?;
        records.push(TrialRecord {
            trial: o.trial,
            seed: o.seed,
            realization_seed: derive_seed(o.seed, REALIZATION_STREAM),
            photon_seed: derive_seed(o.seed, PHOTON_STREAM),
            configuration: &o.configuration,
            event_indices: &o.event_indices,
            couplings_um: resolved.alphabet.realization(&o.event_indices)?.couplings().to_vec(),
            protected_survival: o.run.total_survival,
            conditional_survivals: &o.run.conditional_survivals,
            momentum_second_moments: &o.run.momentum_second_moments,
            unprotected_survival: o.unprotected_survival,
            detected_photons: o.histogram.total(),
            overflow: o.histogram.overflow,
            histogram: name,
        });
    }
    artifacts.write_json(
        "runs.json",
        &RunsFile {
            theta: resolved.config.theta,
            sigma_um: resolved.config.sigma_um,
            unit_shift_um: resolved.alphabet.unit_shift(),
            calibration: resolved.calibration.as_ref(),
            trials: records,
        },
    )?;
    Ok(())
}

/// Returns the number of failed trials.
pub fn simulate(resolved: &Resolved, out: &Path) -> Result<usize> {
    let results = run_trials(resolved);
    let mut artifacts = Artifacts::create(out)?;
    artifacts.write("config.toml", resolved.config.to_toml().as_bytes())?;
    let mut ok = Vec::new();
    let mut failed = 0;
    for r in &results {
        match r {
            Ok(o) => {
                println!(
                    "trial {:>3}: {}  protected {:.4}  unprotected {:.4}",
                    o.trial, o.configuration, o.run.total_survival, o.unprotected_survival
                );
                ok.push(o);
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                failed += 1;
            }
        }
    }
    write_trials(&mut artifacts, resolved, &ok)?;
    artifacts.finish(
        "simulate",
        resolved.config.seed,
        &seed_entries(resolved.config.seed, resolved.config.trials),
    )?;
    println!("wrote {} trial(s) to {}", ok.len(), out.display());
    Ok(failed)
}

/// Histogram files named directly, or the CSV files of a directory (its
/// `histograms/` subdirectory when present), in name order.
pub fn expand_histogram_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let dir = if input.join("histograms").is_dir() {
                input.join("histograms")
            } else {
                input.clone()
            };
            let mut found: Vec<PathBuf> = std::fs::read_dir(&dir)
                .with_context(|| format!("cannot list {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            if found.is_empty() {
                bail!("no histogram CSV files in {}", dir.display());
            }
            paths.extend(found);
        } else {
            paths.push(input.clone());
        }
    }
    if paths.is_empty() {
        bail!("no histogram files given");
    }
    Ok(paths)
}

pub fn read_histograms(paths: &[PathBuf], resolved: &Resolved) -> Result<Vec<SpatialHistogram>> {
    paths
        .iter()
        .map(|p| {
            let name = p.display().to_string();
            let file = File::open(p).with_context(|| format!("cannot open {name}"))?;
            let hist = read_histogram_csv(file, &name)?;
            if !hist.geometry.is_compatible(&resolved.geometry) {
                bail!(
                    "{name}: detector geometry ({} px, pitch {} um, offset {} um) differs from the config ({} px, pitch {} um, offset {} um)",
                    hist.geometry.pixels,
                    hist.geometry.pitch,
                    hist.geometry.offset,
                    resolved.geometry.pixels,
                    resolved.geometry.pitch,
                    resolved.geometry.offset
                );
            }
            if hist.total() == 0 {
                bail!("{name}: histogram is empty");
            }
            Ok(hist)
        })
        .collect()
}

fn candidate_table(resolved: &Resolved) -> Result<CandidateTable> {
    Ok(CandidateTable::build(
        &resolved.alphabet,
        resolved.probe,
        resolved.config.sigma_um,
        resolved.config.events,
    )?)
}

fn estimate_report(
    histograms: &[SpatialHistogram],
    table: &CandidateTable,
    resolved: &Resolved,
    kind: EstimatorKind,
) -> Result<EstimateReport> {
    let recon = reconstruct_all(histograms, table, kind, resolved.config.mean_tolerance_um)?;
    Ok(build_report(&recon, &resolved.alphabet, resolved.config.events)?)
}

pub fn estimate(resolved: &Resolved, inputs: &[PathBuf], kind: EstimatorKind, out: &Path) -> Result<EstimateReport> {
    let paths = expand_histogram_paths(inputs)?;
    let histograms = read_histograms(&paths, resolved)?;
    let table = candidate_table(resolved)?;
    let report = estimate_report(&histograms, &table, resolved, kind)?;
    let text = report.render_table(Some(&resolved.config.probabilities));
    let mut artifacts = Artifacts::create(out)?;
    artifacts.write_json("report.json", &report)?;
    artifacts.write("report.txt", text.as_bytes())?;
    let inputs: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    artifacts.finish("estimate", resolved.config.seed, &inputs)?;
    print!("{text}");
    Ok(report)
}

#[derive(Serialize)]
struct CalibrationFile<'a> {
    target: f64,
    theta: f64,
    sigma_um: f64,
    reference: &'a Configuration,
    #[serde(flatten)]
    calibration: &'a Calibration,
}

pub fn calibrate(config: &ExperimentConfig, target: f64, out: Option<&Path>) -> Result<Calibration> {
    let c = config.calibrate(target)?;
    println!(
        "g/sigma = {:.6}  g = {:.4} um  u = {:.6}  protected {:.6}  unprotected {:.6}  (floor {:.6})",
        c.shift_over_sigma, c.unit_shift, c.u, c.protected_survival, c.unprotected_survival, c.survival_floor
    );
    if let Some(out) = out {
        let mut artifacts = Artifacts::create(out)?;
        artifacts.write_json(
            "calibration.json",
            &CalibrationFile {
                target,
                theta: config.theta,
                sigma_um: config.sigma_um,
                reference: &config.calibration_reference,
                calibration: &c,
            },
        )?;
        let mut calibrated = config.clone();
        calibrated.unit_shift_um = Some(c.unit_shift);
        artifacts.write("config.toml", calibrated.to_toml().as_bytes())?;
        artifacts.finish("calibrate", config.seed, &Vec::<u64>::new())?;
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SamplerKind {
    Constant,
    Uniform,
    Alphabet,
}

fn sampler_for(kind: SamplerKind, resolved: &Resolved) -> CouplingSampler {
    let g = resolved.alphabet.unit_shift();
    match kind {
        SamplerKind::Constant => CouplingSampler::Constant { value: g },
        SamplerKind::Uniform => CouplingSampler::Uniform {
            low: 0.0,
            high: 2.0 * g,
        },
        SamplerKind::Alphabet => CouplingSampler::Alphabet {
            alphabet: resolved.alphabet.clone(),
        },
    }
}

fn scaling_csv(reports: &[(SamplerKind, ScalingReport)]) -> String {
    let mut out = String::from(
        "sampler,events,j_ratio_mean,j_ratio_std,decay_ratio_mean,decay_ratio_std,protected_survival_mean,unprotected_survival_mean\n",
    );
    for (kind, report) in reports {
        for r in &report.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                format!("{kind:?}").to_lowercase(),
                r.events,
                r.j_ratio_mean,
                r.j_ratio_std,
                r.decay_ratio_mean,
                r.decay_ratio_std,
                r.protected_survival_mean,
                r.unprotected_survival_mean
            );
        }
    }
    out
}

fn scaling_svg(reports: &[(SamplerKind, ScalingReport)]) -> String {
    let max_n = reports
        .iter()
        .flat_map(|(_, r)| r.rows.iter().map(|row| row.events))
        .max()
        .unwrap_or(1) as f64;
    let reference = Series::new(vec![(1.0, 1.0), (max_n, 1.0 / max_n)], Style::Line, "black")
        .dashed()
        .width(1.0)
        .label("1/N");
    let mut j_panel = Panel {
        title: "Fixed-bath exponent ratio".into(),
        x_label: "N (measurements)".into(),
        y_label: "J_N / J_1".into(),
        log_x: true,
        log_y: true,
        series: vec![reference.clone()],
        ..Panel::default()
    };
    let mut exact_panel = Panel {
        title: "Exact survival exponent ratio".into(),
        x_label: "N (measurements)".into(),
        y_label: "ln p_protected / ln p_unprotected".into(),
        log_x: true,
        log_y: true,
        series: vec![reference],
        ..Panel::default()
    };
    for (i, (kind, report)) in reports.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let name = format!("{kind:?}").to_lowercase();
        let j: Vec<(f64, f64)> = report.rows.iter().map(|r| (r.events as f64, r.j_ratio_mean)).collect();
        let e: Vec<(f64, f64)> = report
            .rows
            .iter()
            .map(|r| (r.events as f64, r.decay_ratio_mean))
            .collect();
        j_panel
            .series
            .push(Series::new(j.clone(), Style::Line, color).label(name.clone()));
        j_panel.series.push(Series::new(j, Style::Markers, color).width(1.0));
        exact_panel
            .series
            .push(Series::new(e.clone(), Style::Line, color).label(name));
        exact_panel
            .series
            .push(Series::new(e, Style::Markers, color).width(1.0));
    }
    plot::render(&[j_panel, exact_panel], 2)
}

pub fn scaling_report(
    resolved: &Resolved,
    samplers: &[SamplerKind],
    events: &[usize],
    ensemble: usize,
    out: &Path,
) -> Result<()> {
    let seed = resolved.config.seed;
    let reports: Vec<(SamplerKind, ScalingReport)> = samplers
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let report = qze_scaling_report(
                resolved.probe,
                resolved.config.sigma_um,
                &sampler_for(kind, resolved),
                events,
                ensemble,
                derive_seed(seed, i as u64),
            )?;
            Ok((kind, report))
        })
        .collect::<Result<_>>()?;
    let mut artifacts = Artifacts::create(out)?;
    let csv = scaling_csv(&reports);
    artifacts.write("scaling.csv", csv.as_bytes())?;
    let json: Vec<serde_json::Value> = reports
        .iter()
        .map(|(k, r)| serde_json::json!({ "sampler": format!("{k:?}").to_lowercase(), "report": r }))
        .collect();
    artifacts.write_json("scaling.json", &json)?;
    artifacts.write("scaling.svg", scaling_svg(&reports).as_bytes())?;
    let seeds: Vec<u64> = (0..samplers.len()).map(|i| derive_seed(seed, i as u64)).collect();
    artifacts.finish("scaling-report", seed, &seeds)?;
    print!("{csv}");
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3a,
    Fig3b,
    Fig3c,
    Scaling,
}

pub struct RecipeOptions {
    pub seed: Option<u64>,
    pub photons: Option<usize>,
}

pub fn reproduce(base: &ExperimentConfig, figure: Figure, options: &RecipeOptions, out: &Path) -> Result<()> {
    match figure {
        Figure::Fig2 => reproduce_fig2(base, options, out),
        Figure::Fig3a => reproduce_fig3(base, 0, options, out),
        Figure::Fig3b => reproduce_fig3(base, 1, options, out),
        Figure::Fig3c => reproduce_fig3(base, 2, options, out),
        Figure::Scaling => {
            let mut config = base.clone();
            config.seed = options.seed.unwrap_or(SCALING_SEED);
            let resolved = config.resolve()?;
            scaling_report(
                &resolved,
                &[SamplerKind::Constant, SamplerKind::Uniform, SamplerKind::Alphabet],
                &SCALING_EVENTS,
                400,
                out,
            )
        }
    }
}

#[derive(Serialize)]
struct Fig2Summary<'a> {
    truth: &'a Configuration,
    protected_survival: f64,
    unprotected_survival: f64,
    calibration: Option<&'a Calibration>,
    l2: &'a Reconstruction,
    moments: &'a Reconstruction,
    recovered: bool,
}

fn reproduce_fig2(base: &ExperimentConfig, options: &RecipeOptions, out: &Path) -> Result<()> {
    let mut config = base.clone();
    let truth: Configuration = crate::config::DEFAULT_REFERENCE.parse()?;
    if config.multipliers.len() != truth.len() {
        bail!("the fig2 recipe needs a five-value alphabet");
    }
    config.forced_configuration = Some(truth.clone());
    config.events = truth.total();
    config.trials = 1;
    config.seed = options.seed.unwrap_or(FIG2_SEED);
    if let Some(p) = options.photons {
        config.photons = p;
    }
    let resolved = config.resolve()?;
    let trial = simulate_trial(&resolved.spec(), 0)?;
    let table = candidate_table(&resolved)?;
    let hists = [trial.histogram.clone()];
    let l2 = reconstruct_all(&hists, &table, EstimatorKind::L2, None)?.remove(0);
    let moments = reconstruct_all(&hists, &table, EstimatorKind::Moments, config.mean_tolerance_um)?.remove(0);
    let recovered = l2.configuration == truth && moments.configuration == truth;

    let mut artifacts = Artifacts::create(out)?;
    artifacts.write("config.toml", resolved.config.to_toml().as_bytes())?;
    artifacts.write(&histogram_name(0), &csv_bytes(&trial.histogram)?)?;

    let g = resolved.alphabet.unit_shift();
    let sigma = config.sigma_um;
    let total_shift = truth.realization(&resolved.alphabet)?.total();
    let (x_lo, x_hi) = (-4.0 * sigma, total_shift + 4.0 * sigma);
    let grid: Vec<f64> = (0..=300).map(|i| x_lo + (x_hi - x_lo) * i as f64 / 300.0).collect();
    let truth_density = TheoreticalDensity::from_state(trial.run.final_state.clone())?;

    let mut curves = String::from("x_um,true_density");
    for c in table.configurations() {
        let _ = write!(
            curves,
            ",c{}",
            c.counts().iter().map(u32::to_string).collect::<Vec<_>>().join("")
        );
    }
    curves.push('\n');
    for &x in &grid {
        let _ = write!(curves, "{x},{}", truth_density.pdf(x));
        for c in 0..table.len() {
            let _ = write!(curves, ",{}", table.density(c).pdf(x));
        }
        curves.push('\n');
    }
    artifacts.write("fig2_densities.csv", curves.as_bytes())?;

    let geometry = trial.histogram.geometry;
    let detected = trial.histogram.total() as f64;
    let measured: Vec<(f64, f64)> = (0..geometry.pixels)
        .map(|i| {
            (
                geometry.pixel_center(i),
                trial.histogram.counts[i] as f64 / (detected * geometry.pitch),
            )
        })
        .filter(|(x, _)| (x_lo..=x_hi).contains(x))
        .collect();
    let mut hist_csv = String::from("center_x_um,measured_density\n");
    for (x, d) in &measured {
        let _ = writeln!(hist_csv, "{x},{d}");
    }
    artifacts.write("fig2_measured.csv", hist_csv.as_bytes())?;

    let mut series = Vec::new();
    for c in 0..table.len() {
        if c == moments.index || moments.stage_one.contains(&c) {
            continue;
        }
        let pts = grid.iter().map(|&x| (x, table.density(c).pdf(x))).collect();
        series.push(Series::new(pts, Style::Line, "#999999").width(0.6).opacity(0.25));
    }
    for (n, &c) in moments.stage_one.iter().enumerate() {
        let pts = grid.iter().map(|&x| (x, table.density(c).pdf(x))).collect();
        let s = Series::new(pts, Style::Line, PALETTE[3]).width(1.0).opacity(0.8);
        series.push(if n == 0 { s.label("same-mean candidates") } else { s });
    }
    series.push(
        Series::new(measured, Style::Steps, "black")
            .width(1.0)
            .label("detected photons"),
    );
    let truth_pts = grid.iter().map(|&x| (x, truth_density.pdf(x))).collect();
    series.push(
        Series::new(truth_pts, Style::Line, PALETTE[1])
            .width(2.0)
            .label(format!("true {truth}")),
    );
    let panel = Panel {
        title: format!(
            "Output profile, g/sigma = {:.3}; reconstructed {} (L2), {} (moments)",
            g / sigma,
            l2.configuration,
            moments.configuration
        ),
        x_label: "x (um)".into(),
        y_label: "probability density (1/um)".into(),
        series,
        ..Panel::default()
    };
    artifacts.write("fig2.svg", plot::render(&[panel], 1).as_bytes())?;

    let summary = Fig2Summary {
        truth: &truth,
        protected_survival: trial.run.total_survival,
        unprotected_survival: trial.unprotected_survival,
        calibration: resolved.calibration.as_ref(),
        l2: &l2,
        moments: &moments,
        recovered,
    };
    artifacts.write_json("report.json", &summary)?;
    artifacts.finish("reproduce fig2", config.seed, &seed_entries(config.seed, 1))?;
    println!(
        "fig2: truth {truth}, protected {:.4}, unprotected {:.4}; L2 -> {}, moments -> {}",
        trial.run.total_survival, trial.unprotected_survival, l2.configuration, moments.configuration
    );
    Ok(())
}

fn reproduce_fig3(base: &ExperimentConfig, set: usize, options: &RecipeOptions, out: &Path) -> Result<()> {
    let targets = FIG3_TARGETS[set];
    let mut config = base.clone();
    if config.multipliers.len() != targets.len() {
        bail!("the fig3 recipes need a five-value alphabet");
    }
    config.probabilities = targets.to_vec();
    config.forced_configuration = None;
    config.trials = 10;
    config.seed = options.seed.unwrap_or(FIG3_SEEDS[set]);
    if let Some(p) = options.photons {
        config.photons = p;
    }
    let resolved = config.resolve()?;
    let outputs = run_trials(&resolved).into_iter().collect::<Result<Vec<_>>>()?;
    let table = candidate_table(&resolved)?;
    let histograms: Vec<SpatialHistogram> = outputs.iter().map(|o| o.histogram.clone()).collect();
    let recon = reconstruct_all(&histograms, &table, config.estimator, config.mean_tolerance_um)?;

    let mut artifacts = Artifacts::create(out)?;
    artifacts.write("config.toml", resolved.config.to_toml().as_bytes())?;
    let refs: Vec<&TrialOutput> = outputs.iter().collect();
    write_trials(&mut artifacts, &resolved, &refs)?;

    let mut convergence = String::from("L,k,G_um,target,p_R,ci68_lower,ci68_upper,ci95_lower,ci95_upper\n");
    let mut by_l = Vec::new();
    for l in 1..=recon.len() {
        let report = build_report(&recon[..l], &resolved.alphabet, config.events)?;
        for k in 0..targets.len() {
            let _ = writeln!(
                convergence,
                "{l},{},{},{},{},{},{},{},{}",
                k + 1,
                report.alphabet[k],
                targets[k],
                report.p_r[k],
                report.ci68[k].lower,
                report.ci68[k].upper,
                report.ci95[k].lower,
                report.ci95[k].upper
            );
        }
        by_l.push(report);
    }
    artifacts.write("convergence.csv", convergence.as_bytes())?;
    let report = by_l.last().expect("ten trials");
    let text = report.render_table(Some(&targets));
    artifacts.write_json("report.json", report)?;
    artifacts.write("report.txt", text.as_bytes())?;

    let ls: Vec<f64> = (1..=by_l.len()).map(|l| l as f64).collect();
    let panels: Vec<Panel> = (0..targets.len())
        .map(|k| {
            let band = |lo: fn(&EstimateReport, usize) -> f64, hi: fn(&EstimateReport, usize) -> f64, opacity| Band {
                x: ls.clone(),
                lower: by_l.iter().map(|r| lo(r, k)).collect(),
                upper: by_l.iter().map(|r| hi(r, k)).collect(),
                color: PALETTE[0].into(),
                opacity,
            };
            Panel {
                title: format!("k = {} (G = {:.1} um)", k + 1, report.alphabet[k]),
                x_label: "L (trials)".into(),
                y_label: "p_k".into(),
                y_range: Some((0.0, 1.0)),
                bands: vec![
                    band(|r, k| r.ci95[k].lower, |r, k| r.ci95[k].upper, 0.15),
                    band(|r, k| r.ci68[k].lower, |r, k| r.ci68[k].upper, 0.3),
                ],
                series: vec![
                    Series::new(ls.iter().map(|&l| (l, targets[k])).collect(), Style::Line, PALETTE[1])
                        .dashed()
                        .label("target"),
                    Series::new(
                        ls.iter().zip(&by_l).map(|(&l, r)| (l, r.p_r[k])).collect(),
                        Style::Line,
                        PALETTE[0],
                    )
                    .label("estimate"),
                ],
                ..Panel::default()
            }
        })
        .collect();
    let name = ["fig3a", "fig3b", "fig3c"][set];
    artifacts.write(&format!("{name}.svg"), plot::render(&panels, 3).as_bytes())?;
    artifacts.finish(
        &format!("reproduce {name}"),
        config.seed,
        &seed_entries(config.seed, config.trials),
    )?;
    print!("{text}");
    Ok(())
}
