use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use kramers_core::discretize::check_box;
use kramers_core::graded::{center_distances, default_k, localized_spectrum, random_instance, RandomParams};
use kramers_core::landscape::validate_stationarity;
use kramers_core::quasimode::{build_all, dirichlet_and_residuals, dirichlet_phi_prediction, interaction_matrix, l2_prediction};
use kramers_core::saddle::{predict_spectrum, saddle_data_for};
use kramers_core::sde::{default_config, hitting_time_stats, within_hypotheses};
use kramers_core::{
    analyze, assemble, find_critical_points, peclet, small_spectrum, CriticalPoint, EkPrediction, Form, Grid, Labelling,
    Landscape, OperatorMatrix, SaddleSpectralData, SpectrumResult,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{RunConfig, Stage};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

#[derive(Debug, Clone, Serialize)]
pub struct StageOutcome {
    pub stage: Stage,
    pub pass: bool,
    /// One line per failed invariant.
    pub failures: Vec<String>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SdeSeed {
    pub c: f64,
    pub h: f64,
    pub seed: u64,
}

#[derive(Debug, Default, Serialize)]
pub struct Seeds {
    pub base: u64,
    pub sde: Vec<SdeSeed>,
    pub graded: Option<u64>,
}

pub struct RunReport {
    pub stages: Vec<StageOutcome>,
    pub seeds: Seeds,
}

impl RunReport {
    pub fn pass(&self) -> bool {
        self.stages.iter().all(|s| s.pass)
    }
}

/// Everything analyze produces for one value of c.
struct Analysis {
    c: f64,
    land: Landscape,
    cps: Vec<CriticalPoint>,
    lab: Labelling,
    saddles: Vec<SaddleSpectralData>,
}

impl Analysis {
    fn n0(&self) -> usize {
        self.lab.wellmap.n0()
    }

    fn predictions(&self, h: f64) -> Result<Vec<EkPrediction>, String> {
        predict_spectrum(&self.cps, &self.lab.wellmap, &self.lab.generic, &self.saddles, h).map_err(|e| e.to_string())
    }
}

struct Sink {
    failures: Vec<String>,
}

impl Sink {
    fn new() -> Self {
        Sink { failures: Vec::new() }
    }

    fn fail(&mut self, what: String) {
        self.failures.push(what);
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

/// Shortest round-trip text; exponent form outside [1e-4, 1e15).
fn num(x: f64) -> String {
    if x == 0.0 || (x.is_finite() && (1e-4..1e15).contains(&x.abs())) {
        x.to_string()
    } else if x.is_finite() {
        format!("{x:e}")
    } else if x.is_nan() {
        String::new()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "inf".into(), num)
}

struct Table {
    path: String,
    w: csv::Writer<File>,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[String]) -> Result<Table, RunError> {
        let p = dir.join(name);
        let path = p.display().to_string();
        let file = File::create(&p).map_err(|source| RunError::Io { path: path.clone(), source })?;
        let mut t = Table { path, w: csv::Writer::from_writer(file) };
        t.row(header)?;
        Ok(t)
    }

    fn row(&mut self, fields: &[String]) -> Result<(), RunError> {
        self.w.write_record(fields).map_err(|source| RunError::Csv { path: self.path.clone(), source })
    }

    fn finish(mut self) -> Result<(), RunError> {
        self.w.flush().map_err(|source| RunError::Io { path: self.path.clone(), source })
    }
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let shown = path.display().to_string();
    let mut text = serde_json::to_string_pretty(value).map_err(|source| RunError::Json { path: shown.clone(), source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| RunError::Io { path: shown, source })
}

/// Smallest n = n_min + k n_step meeting the Peclet bound, if any up to n_max.
fn operator_grid(cfg: &RunConfig, land: &Landscape, h: f64) -> Result<Grid, String> {
    let g = &cfg.grid;
    let mut n = g.n_min;
    while n <= g.n_max {
        let grid = Grid::new(land.half_width, n).map_err(|e| e.to_string())?;
        if peclet(land, h, &grid) <= 1.0 {
            return Ok(grid);
        }
        n += g.n_step;
    }
    Err(format!("Peclet bound not met on any grid up to n = {}", g.n_max))
}

fn operator(cfg: &RunConfig, a: &Analysis, h: f64) -> Result<OperatorMatrix, String> {
    let grid = operator_grid(cfg, &a.land, h)?;
    check_box(&grid, &a.cps).map_err(|e| e.to_string())?;
    assemble(&a.land, &a.cps, h, &grid, Form::LWeighted).map_err(|e| e.to_string())
}

fn spectrum_of(cfg: &RunConfig, a: &Analysis, op: &OperatorMatrix) -> Result<SpectrumResult, String> {
    let count = cfg.spectrum.count.max(a.n0() + 4).min(20);
    small_spectrum(op, count, false).map_err(|e| e.to_string())
}

pub fn run(cfg: &RunConfig, stages: &BTreeSet<Stage>, out: &Path) -> Result<RunReport, RunError> {
    std::fs::create_dir_all(out).map_err(|source| RunError::Io { path: out.display().to_string(), source })?;
    let mut report = RunReport { stages: Vec::new(), seeds: Seeds { base: cfg.seed, ..Default::default() } };
    let mut analyses = Vec::new();
    if stages.iter().any(|s| s.needs_landscape()) {
        let (outcome, done) = stage_analyze(cfg, out)?;
        report.stages.push(outcome);
        analyses = done;
    }
    for &stage in stages {
        let outcome = match stage {
            Stage::Analyze => continue,
            Stage::Spectrum => stage_spectrum(cfg, &analyses, out)?,
            Stage::Quasimode => stage_quasimode(cfg, &analyses, out)?,
            Stage::Sde => stage_sde(cfg, &analyses, out, &mut report.seeds)?,
            Stage::GradedSelftest => {
                report.seeds.graded = Some(cfg.seed);
                stage_graded(cfg, out)?
            }
        };
        report.stages.push(outcome);
    }
    Ok(report)
}

fn analyze_one(cfg: &RunConfig, c: f64, sink: &mut Sink) -> Option<Analysis> {
    let Some(spec) = cfg.landscape.as_ref() else {
        sink.fail("no landscape configured".into());
        return None;
    };
    let result = (|| {
        let land = Landscape::from_spec(spec, c).map_err(|e| e.to_string())?;
        let cps = find_critical_points(&land, cfg.grid.seed_resolution).map_err(|e| e.to_string())?;
        let lab = analyze(&land, &cps, cfg.grid.labelling_n).map_err(|e| e.to_string())?;
        let saddles = saddle_data_for(&land, &cps, &lab.wellmap).map_err(|e| e.to_string())?;
        Ok::<_, String>(Analysis { c, land, cps, lab, saddles })
    })();
    match result {
        Ok(a) => Some(a),
        Err(e) => {
            sink.fail(format!("c = {c}: {e}"));
            None
        }
    }
}

fn stage_analyze(cfg: &RunConfig, out: &Path) -> Result<(StageOutcome, Vec<Analysis>), RunError> {
    let mut sink = Sink::new();
    let mut done = Vec::new();
    for &c in &cfg.c {
        if let Some(a) = analyze_one(cfg, c, &mut sink) {
            let st = validate_stationarity(&a.land, 1000, 1e-10, cfg.seed);
            sink.check(st.pass, || {
                format!(
                    "c = {c}: stationarity of m_h violated (|b.grad V| {:.2e}, |div nu| {:.2e}, |div b - nu.grad V| {:.2e})",
                    st.b_dot_grad, st.div_nu, st.div_b
                )
            });
            let g = &a.lab.generic;
            sink.check(g.generic || g.double_well_equal_depth, || format!("c = {c}: generic assumption fails: {}", g.violations.join("; ")));
            done.push(a);
        }
    }
    let dim = done.first().map_or(2, |a| a.land.dim);
    let mut cols = vec!["c".to_string(), "minimum".into(), "round".into()];
    cols.extend((1..=dim).map(|i| format!("x{i}")));
    cols.extend(header(&["V", "sigma", "barrier", "zeta", "saddles"]));
    let mut t = Table::create(out, "ek_table.csv", &cols)?;
    for a in &done {
        let zetas = match a.predictions(1.0) {
            Ok(p) => p.into_iter().map(|p| p.zeta).collect(),
            Err(e) => {
                sink.fail(format!("c = {}: {e}", a.c));
                vec![None; a.n0()]
            }
        };
        for (e, zeta) in a.lab.wellmap.entries.iter().zip(zetas) {
            let cp = &a.cps[e.minimum];
            let mut row = vec![num(a.c), e.minimum.to_string(), e.round.to_string()];
            row.extend(cp.location.iter().map(|&x| num(x)));
            let saddles: Vec<String> = e.saddles.iter().map(|s| s.to_string()).collect();
            row.extend([num(cp.value), opt(e.sigma), opt(e.barrier), zeta.map_or_else(String::new, num), saddles.join(" ")]);
            t.row(&row)?;
        }
    }
    t.finish()?;
    let outcome = StageOutcome {
        stage: Stage::Analyze,
        pass: sink.failures.is_empty(),
        failures: sink.failures,
        files: vec!["ek_table.csv".into()],
    };
    Ok((outcome, done))
}

fn jobs(cfg: &RunConfig, analyses: &[Analysis]) -> Vec<(usize, f64)> {
    (0..analyses.len()).flat_map(|i| cfg.h.iter().map(move |&h| (i, h))).collect()
}

fn stage_spectrum(cfg: &RunConfig, analyses: &[Analysis], out: &Path) -> Result<StageOutcome, RunError> {
    let mut sink = Sink::new();
    let mut t = Table::create(
        out,
        "spectrum_sweep.csv",
        &header(&["h", "c", "n", "k", "re_lambda", "im_lambda", "ek_prediction", "ratio", "residual"]),
    )?;
    let results: Vec<_> = jobs(cfg, analyses)
        .into_iter()
        .map(|(i, h)| {
            let a = &analyses[i];
            let r = operator(cfg, a, h).and_then(|op| Ok((op.grid.n, spectrum_of(cfg, a, &op)?, a.predictions(h)?)));
            (a, h, r)
        })
        .collect();
    for (a, h, r) in results {
        let (n, spec, pred) = match r {
            Ok(x) => x,
            Err(e) => {
                sink.fail(format!("c = {}, h = {h}: {e}", a.c));
                continue;
            }
        };
        let mut lams: Vec<f64> = pred.iter().map(|p| p.lambda).collect();
        lams.sort_by(f64::total_cmp);
        sink.check(spec.n0_observed == a.n0(), || {
            format!("c = {}, h = {h}: {} eigenvalues below the observed gap, labelling gives n0 = {}", a.c, spec.n0_observed, a.n0())
        });
        for (k, v) in spec.values.iter().enumerate().take(a.n0().max(spec.n0_observed)) {
            let ek = lams.get(k).copied();
            let ratio = match ek {
                Some(l) if l > 0.0 => num(v[0] / l),
                _ => String::new(),
            };
            t.row(&[
                num(h),
                num(a.c),
                n.to_string(),
                k.to_string(),
                num(v[0]),
                num(v[1]),
                ek.map_or_else(String::new, num),
                ratio,
                num(spec.residuals[k]),
            ])?;
        }
    }
    t.finish()?;
    Ok(StageOutcome {
        stage: Stage::Spectrum,
        pass: sink.failures.is_empty(),
        failures: sink.failures,
        files: vec!["spectrum_sweep.csv".into()],
    })
}

/// Off-diagonal interaction entries above this, relative to the diagonal, mean overlapping supports.
const INTERACTION_TOL: f64 = 1e-8;

fn stage_quasimode(cfg: &RunConfig, analyses: &[Analysis], out: &Path) -> Result<StageOutcome, RunError> {
    let mut sink = Sink::new();
    let mut t = Table::create(
        out,
        "quasimode_report.csv",
        &header(&[
            "h",
            "c",
            "n",
            "minimum",
            "l2",
            "l2_prediction",
            "l2_ratio",
            "dirichlet_phi",
            "dirichlet_prediction",
            "dirichlet_ratio",
            "residual_ratio",
            "interaction_offdiag",
        ]),
    )?;
    for (i, h) in jobs(cfg, analyses) {
        let a = &analyses[i];
        if a.n0() < 2 {
            continue;
        }
        let built = operator(cfg, a, h).and_then(|op| {
            let qms = build_all(&a.land, &a.lab.wellmap, &a.cps, &a.saddles, &op).map_err(|e| e.to_string())?;
            let inter = interaction_matrix(&qms, &op).map_err(|e| e.to_string())?;
            Ok((op, qms, inter))
        });
        let (op, qms, inter) = match built {
            Ok(x) => x,
            Err(e) => {
                sink.fail(format!("c = {}, h = {h}: {e}", a.c));
                continue;
            }
        };
        let off = inter.offdiag_relative();
        sink.check(off <= INTERACTION_TOL, || {
            format!("c = {}, h = {h}: quasimode interaction matrix not diagonal (relative off-diagonal {off:.2e})", a.c)
        });
        let mbar = &a.cps[a.lab.wellmap.global_min().minimum];
        for (e, q) in a.lab.wellmap.entries.iter().zip(&qms).filter(|(e, _)| e.sigma.is_some()) {
            let forms = match dirichlet_and_residuals(q, &op) {
                Ok(f) => f,
                Err(err) => {
                    sink.fail(format!("c = {}, h = {h}, minimum {}: {err}", a.c, e.minimum));
                    continue;
                }
            };
            sink.check(forms.dirichlet_psi > 0.0, || {
                format!("c = {}, h = {h}, minimum {}: Dirichlet form {} is not positive", a.c, e.minimum, forms.dirichlet_psi)
            });
            let l2 = q.norm * q.norm;
            let l2p = l2_prediction(&a.cps[e.minimum], mbar, h);
            let dp = dirichlet_phi_prediction(e, &a.cps, &a.saddles, h).unwrap_or(f64::NAN);
            t.row(&[
                num(h),
                num(a.c),
                op.grid.n.to_string(),
                e.minimum.to_string(),
                num(l2),
                num(l2p),
                num(l2 / l2p),
                num(forms.dirichlet_phi),
                num(dp),
                num(forms.dirichlet_phi / dp),
                num(forms.residual / forms.dirichlet_psi),
                num(off),
            ])?;
        }
    }
    t.finish()?;
    Ok(StageOutcome {
        stage: Stage::Quasimode,
        pass: sink.failures.is_empty(),
        failures: sink.failures,
        files: vec!["quasimode_report.csv".into()],
    })
}

fn stage_sde(cfg: &RunConfig, analyses: &[Analysis], out: &Path, seeds: &mut Seeds) -> Result<StageOutcome, RunError> {
    let mut sink = Sink::new();
    let mut t = Table::create(
        out,
        "sde_report.csv",
        &header(&[
            "h",
            "c",
            "mean_tau",
            "stderr",
            "inv_lambda2",
            "ratio",
            "trials",
            "censored",
            "dt",
            "target_radius",
            "within_hypotheses",
        ]),
    )?;
    for (job, (i, h)) in jobs(cfg, analyses).into_iter().enumerate() {
        let a = &analyses[i];
        if a.n0() < 2 {
            continue;
        }
        let seed = cfg.seed.wrapping_add(job as u64);
        seeds.sde.push(SdeSeed { c: a.c, h, seed });
        let result = (|| {
            let mut sim = default_config(&a.land, &a.cps, &a.lab.wellmap, h, cfg.sde.trials, seed).map_err(|e| e.to_string())?;
            sim.max_time = cfg.sde.max_time;
            let stats = hitting_time_stats(&a.land, &sim).map_err(|e| e.to_string())?;
            let op = operator(cfg, a, h)?;
            let spec = spectrum_of(cfg, a, &op)?;
            Ok::<_, String>((sim, stats, spec.re(1)))
        })();
        let (sim, stats, lambda2) = match result {
            Ok(x) => x,
            Err(e) => {
                sink.fail(format!("c = {}, h = {h}: {e}", a.c));
                continue;
            }
        };
        sink.check(stats.censored == 0, || {
            format!("c = {}, h = {h}: {} of {} trials did not reach the target before t = {}", a.c, stats.censored, stats.trials, sim.max_time)
        });
        t.row(&[
            num(h),
            num(a.c),
            num(stats.mean),
            num(stats.stderr),
            num(1.0 / lambda2),
            num(stats.mean * lambda2),
            stats.trials.to_string(),
            stats.censored.to_string(),
            num(stats.dt),
            num(sim.target_radius),
            within_hypotheses(&a.land).to_string(),
        ])?;
    }
    t.finish()?;
    Ok(StageOutcome { stage: Stage::Sde, pass: sink.failures.is_empty(), failures: sink.failures, files: vec!["sde_report.csv".into()] })
}

#[derive(Debug, Serialize)]
struct GradedSummary {
    seed: u64,
    instances: usize,
    /// Eigenvalue-to-center distances must shrink at least this much when h drops tenfold.
    required_shrink: f64,
    min_shrink: f64,
    /// Largest K_min / K over all instances (at most 1 when every eigenvalue sits in its disc).
    max_k_ratio: f64,
    failures: Vec<String>,
    pass: bool,
}

const REQUIRED_SHRINK: f64 = 5.0;

pub fn graded_check(seed: u64, instances: usize) -> (f64, f64, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = RandomParams::default();
    let insts: Vec<_> = (0..instances).map(|_| random_instance(&mut rng, &params)).collect();
    let outcomes: Vec<Result<(f64, f64), String>> = insts
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let s = &inst.structure;
            let k = default_k(s);
            let m = inst.matrix().map_err(|e| format!("instance {i}: {e}"))?;
            let rep = localized_spectrum(&m, s, k).map_err(|e| format!("instance {i}: {e}"))?;
            if !rep.counts_match {
                return Err(format!("instance {i}: disc eigenvalue counts differ from block multiplicities"));
            }
            let small = inst.with_h(s.h / 10.0);
            let m2 = small.matrix().map_err(|e| format!("instance {i}: {e}"))?;
            let rep2 = localized_spectrum(&m2, &small.structure, k).map_err(|e| format!("instance {i} at h/10: {e}"))?;
            let d1 = center_distances(&rep, s);
            let d2 = center_distances(&rep2, &small.structure);
            let shrink = d1.iter().zip(&d2).map(|(a, b)| a / b).fold(f64::INFINITY, f64::min);
            if shrink < REQUIRED_SHRINK {
                return Err(format!("instance {i}: distances shrink by {shrink:.3} < {REQUIRED_SHRINK} when h drops tenfold"));
            }
            Ok((shrink, rep.k_min / rep.k))
        })
        .collect();
    let mut failures = Vec::new();
    let mut min_shrink = f64::INFINITY;
    let mut max_k: f64 = 0.0;
    for o in outcomes {
        match o {
            Ok((s, k)) => {
                min_shrink = min_shrink.min(s);
                max_k = max_k.max(k);
            }
            Err(e) => failures.push(e),
        }
    }
    (min_shrink, max_k, failures)
}

fn stage_graded(cfg: &RunConfig, out: &Path) -> Result<StageOutcome, RunError> {
    let (min_shrink, max_k_ratio, failures) = graded_check(cfg.seed, cfg.graded.instances);
    let summary = GradedSummary {
        seed: cfg.seed,
        instances: cfg.graded.instances,
        required_shrink: REQUIRED_SHRINK,
        min_shrink,
        max_k_ratio,
        pass: failures.is_empty(),
        failures: failures.clone(),
    };
    write_json(&out.join("graded_selftest.json"), &summary)?;
    Ok(StageOutcome {
        stage: Stage::GradedSelftest,
        pass: failures.is_empty(),
        failures,
        files: vec!["graded_selftest.json".into()],
    })
}
