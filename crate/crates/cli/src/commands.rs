//! The batch commands behind each subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use metastab_core::estimators::{noise_factor, stream_rng};
use metastab_core::markov::{analyze_chain, spectrum, MetastableReport, Spectrum, SystemMfpt};
use metastab_core::reduction::{
    collect_dataset, indicator_state, jacobian_indicator, pca, IndicatorChoice, PcaResult,
    TrajectoryDataset,
};
use metastab_core::systems::ReturnMapSystem;
use metastab_core::{NoiseSpec, StateVector, StepOutcome};
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{AnalysisConfig, Method};
use crate::error::{CliError, Result};
use crate::pipeline::{build_chain, ChainBuild};
use crate::svg;
use crate::table::{num, opt, Table};

/// Where artifacts go.
pub fn prepare_output(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir.to_path_buf())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn common_meta(t: &mut Table, cfg: &AnalysisConfig, system: &dyn ReturnMapSystem) {
    t.meta("system", system.name())
        .meta(
            "grid",
            format!(
                "lower={} upper={} cells={}",
                cfg.grid.lower, cfg.grid.upper, cfg.grid.cells
            ),
        )
        .meta("seed", cfg.estimator.seed);
}

pub struct AnalyzeOutput {
    pub build: ChainBuild,
    pub report: MetastableReport,
}

impl AnalyzeOutput {
    pub fn total_absorption(&self) -> bool {
        self.build.total_absorption()
    }
}

/// Builds the chain with the configured estimator, analyzes it, and writes
/// the matrix, report, and plots into `out`.
pub fn analyze(cfg: &AnalysisConfig, out: &Path) -> Result<AnalyzeOutput> {
    let out = prepare_output(out)?;
    let system = cfg.build_system()?;
    let noise = cfg.build_noise(system.as_ref())?;
    let method = cfg.estimator.method;
    let build = build_chain(system.as_ref(), &cfg.grid, &noise, &cfg.estimator, method)?;
    let mut report = analyze_chain(&build.matrix)?;
    report.warnings.splice(0..0, build.warnings.iter().cloned());
    if build.total_absorption() {
        report
            .warnings
            .push("total absorption: every live state absorbs in one step".into());
    }

    write_text(&out.join("config.json"), &cfg.to_json())?;

    let mut t = Table::from_matrix(build.matrix.matrix());
    common_meta(&mut t, cfg, system.as_ref());
    t.meta("method", method.label())
        .meta("states", build.matrix.states())
        .meta(
            "layout",
            "row i = current state; state 0 absorbing; state i = grid cell i",
        );
    t.write(&out.join("transition_matrix.csv"))?;

    eigenvalue_table(&report).write(&out.join("eigenvalues.csv"))?;

    let mut t = Table::new(&[
        "state",
        "midpoint",
        "mfpt",
        "metastable",
        "absorb_probability",
        "next_mean",
        "next_variance",
    ]);
    common_meta(&mut t, cfg, system.as_ref());
    t.meta("method", method.label())
        .meta("lambda2", num(report.lambda2().re))
        .meta("system_mfpt", num(report.system_mfpt.steps))
        .meta("system_mfpt_reliable", report.system_mfpt.reliable);
    for w in &report.warnings {
        t.meta("warning", w);
    }
    let mfpt = |i: usize| report.state_mfpt.as_ref().map(|m| m[i]);
    t.row(vec![
        "0".into(),
        String::new(),
        opt(mfpt(0)),
        num(report.metastable[0]),
        "1".into(),
        String::new(),
        String::new(),
    ]);
    for r in &build.rows {
        let i = r.cell + 1;
        t.row(vec![
            i.to_string(),
            num(r.midpoint),
            opt(mfpt(i)),
            num(report.metastable[i]),
            num(r.row[0]),
            opt(r.mean),
            opt(r.variance),
        ]);
    }
    t.write(&out.join("report.csv"))?;

    let mut t = Table::from_matrix(&report.neighborhood);
    t.meta("layout", "J[i][j] = metastable[i] * T[i][j]");
    t.write(&out.join("neighborhood.csv"))?;

    let label = if system.state_dim() == 1 {
        "state".to_string()
    } else {
        format!("x{}", system.indicator_index() + 1)
    };
    let live = build.matrix.live_block();
    let cells: Vec<Vec<f64>> = live
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    let overlay: Vec<(f64, f64)> = build
        .rows
        .iter()
        .filter_map(
            |r| match system.step_deterministic(&system.state_at(r.midpoint)) {
                StepOutcome::Alive(x) => Some((r.midpoint, x[system.indicator_index()])),
                StepOutcome::Absorbed => None,
            },
        )
        .collect();
    write_text(
        &out.join("return_map.svg"),
        &svg::heat_map(
            "Stochastic return map",
            &label,
            cfg.grid.lower,
            cfg.grid.upper,
            &cells,
            &overlay,
        ),
    )?;
    if let Some(m) = &report.state_mfpt {
        let pts = build
            .rows
            .iter()
            .map(|r| (r.midpoint, m[r.cell + 1]))
            .collect();
        write_text(
            &out.join("mfpt.svg"),
            &svg::line_plot(
                "State-dependent MFPT",
                &label,
                "steps",
                &[("mfpt", pts)],
                true,
            ),
        )?;
    }
    let pts = build
        .rows
        .iter()
        .map(|r| (r.midpoint, report.metastable[r.cell + 1]))
        .collect();
    write_text(
        &out.join("metastable.svg"),
        &svg::line_plot(
            "Metastable distribution",
            &label,
            "probability",
            &[("phi", pts)],
            false,
        ),
    )?;

    Ok(AnalyzeOutput { build, report })
}

fn eigenvalue_table(report: &MetastableReport) -> Table {
    let mut t = Table::new(&["index", "re", "im", "magnitude"]);
    for (k, e) in report.eigenvalues.iter().enumerate() {
        t.row(vec![
            (k + 1).to_string(),
            num(e.re),
            num(e.im),
            num(e.magnitude()),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub sigma: f64,
    pub lambda2: Option<f64>,
    pub mfpt: Option<SystemMfpt>,
    pub error: Option<String>,
}

/// One chain per noise standard deviation `σ` (covariance `σ² I`).
pub fn sweep_noise(cfg: &AnalysisConfig, out: &Path) -> Result<Vec<SweepPoint>> {
    if cfg.sweep.is_empty() {
        return Err(CliError::Config(
            "sweep-noise needs a nonempty `sweep` list".into(),
        ));
    }
    let out = prepare_output(out)?;
    let system = cfg.build_system()?;
    let method = cfg.estimator.method;
    let points: Vec<SweepPoint> = cfg
        .sweep
        .iter()
        .map(|&sigma| {
            let run = || -> Result<MetastableReport> {
                let noise = NoiseSpec::isotropic(system.noise_dim(), sigma * sigma)?;
                let build =
                    build_chain(system.as_ref(), &cfg.grid, &noise, &cfg.estimator, method)?;
                Ok(analyze_chain(&build.matrix)?)
            };
            match run() {
                Ok(r) => SweepPoint {
                    sigma,
                    lambda2: Some(r.lambda2().magnitude()),
                    mfpt: Some(r.system_mfpt),
                    error: None,
                },
                Err(e) => SweepPoint {
                    sigma,
                    lambda2: None,
                    mfpt: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mut t = Table::new(&["sigma", "lambda2", "mfpt", "reliable", "error"]);
    common_meta(&mut t, cfg, system.as_ref());
    t.meta("method", method.label());
    for p in &points {
        t.row(vec![
            num(p.sigma),
            opt(p.lambda2),
            opt(p.mfpt.map(|m| m.steps)),
            p.mfpt.map(|m| m.reliable.to_string()).unwrap_or_default(),
            p.error.clone().unwrap_or_default().replace(',', ";"),
        ]);
    }
    t.write(&out.join("sweep.csv"))?;
    let pts = points
        .iter()
        .filter_map(|p| p.mfpt.filter(|m| m.reliable).map(|m| (p.sigma, m.steps)))
        .collect();
    write_text(
        &out.join("sweep.svg"),
        &svg::line_plot(
            "System MFPT against noise",
            "noise standard deviation",
            "MFPT (steps)",
            &[("M", pts)],
            true,
        ),
    )?;
    Ok(points)
}

pub struct Comparison {
    pub builds: Vec<(Method, ChainBuild)>,
    pub spectra: Vec<(Method, Spectrum)>,
}

impl Comparison {
    pub fn lambda2(&self, method: Method) -> Option<f64> {
        self.spectra
            .iter()
            .find(|(m, _)| *m == method)
            .and_then(|(_, s)| s.second())
            .map(|e| e.re)
    }
}

/// Runs every estimator on the same grid and tabulates per-state moments and
/// the four leading eigenvalues per method.
pub fn compare_estimators(cfg: &AnalysisConfig, out: &Path) -> Result<Comparison> {
    if cfg.estimator.samples < 1000 {
        return Err(CliError::Config(format!(
            "compare-estimators needs at least 1000 Monte Carlo samples, got {}",
            cfg.estimator.samples
        )));
    }
    let out = prepare_output(out)?;
    let system = cfg.build_system()?;
    let noise = cfg.build_noise(system.as_ref())?;
    let mut builds = Vec::new();
    let mut spectra = Vec::new();
    for method in Method::ALL {
        let b = build_chain(system.as_ref(), &cfg.grid, &noise, &cfg.estimator, method)?;
        spectra.push((method, spectrum(&b.matrix, 4)?));
        builds.push((method, b));
    }

    let mut t = Table::new(&[
        "state",
        "midpoint",
        "mc_mean",
        "mc_mean_se",
        "mc_variance",
        "mc_variance_se",
        "mc_absorbed",
        "systematic_mean",
        "systematic_variance",
        "linearized_mean",
        "linearized_variance",
        "ut_mean",
        "ut_variance",
        "ut_absorbed",
    ]);
    common_meta(&mut t, cfg, system.as_ref());
    t.meta("mc_samples", cfg.estimator.samples);
    let get = |m: Method| {
        &builds
            .iter()
            .find(|(k, _)| *k == m)
            .expect("every method built")
            .1
    };
    let (mc, sys, lin, ut) = (
        get(Method::Mc),
        get(Method::Systematic),
        get(Method::Linearized),
        get(Method::Ut),
    );
    for w in &lin.warnings {
        t.meta("warning", w);
    }
    for cell in 0..cfg.grid.cells {
        let l = &lin.rows[cell];
        let (lm, lv) = if l.missing {
            (None, None)
        } else {
            (l.mean, l.variance)
        };
        t.row(vec![
            (cell + 1).to_string(),
            num(mc.rows[cell].midpoint),
            opt(mc.rows[cell].mean),
            opt(mc.rows[cell].mean_se),
            opt(mc.rows[cell].variance),
            opt(mc.rows[cell].variance_se),
            num(mc.rows[cell].absorbed),
            opt(sys.rows[cell].mean),
            opt(sys.rows[cell].variance),
            opt(lm),
            opt(lv),
            opt(ut.rows[cell].mean),
            opt(ut.rows[cell].variance),
            num(ut.rows[cell].absorbed),
        ]);
    }
    t.write(&out.join("estimator_comparison.csv"))?;

    let mut t = Table::new(&[
        "method", "lambda1", "lambda2", "lambda3", "lambda4", "complex",
    ]);
    common_meta(&mut t, cfg, system.as_ref());
    for (method, s) in &spectra {
        let mut row = vec![method.label().to_string()];
        for k in 0..4 {
            row.push(opt(s.values.get(k).map(|e| e.re)));
        }
        row.push(s.any_complex().to_string());
        t.row(row);
    }
    t.write(&out.join("eigenvalue_table.csv"))?;
    Ok(Comparison { builds, spectra })
}

pub struct ReductionOutput {
    pub dataset: TrajectoryDataset,
    pub pca: PcaResult,
    pub pca_choice: IndicatorChoice,
    pub jacobian_choice: Option<IndicatorChoice>,
    pub warnings: Vec<String>,
}

fn initial_state(system: &dyn ReturnMapSystem, x0: &Option<Vec<f64>>) -> StateVector {
    x0.as_ref()
        .map(|v| DVector::from_column_slice(v))
        .unwrap_or_else(|| system.reference_state())
}

/// PCA over a loaded or simulated dataset, plus the Jacobian eigenvector
/// choice at the reduction start state.
pub fn reduce(cfg: &AnalysisConfig, out: &Path) -> Result<ReductionOutput> {
    let out = prepare_output(out)?;
    let system = cfg.build_system()?;
    let rc = &cfg.reduction;
    let x0 = initial_state(system.as_ref(), &rc.x0);
    let dataset = match &rc.dataset {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            TrajectoryDataset::from_csv(&text)?
        }
        None => {
            let noise = cfg.build_noise(system.as_ref())?;
            let ds = collect_dataset(system.as_ref(), &x0, rc.steps, &noise, cfg.estimator.seed)?;
            write_text(&out.join("dataset.csv"), &ds.to_csv())?;
            ds
        }
    };
    let result = pca(&dataset, rc.standardize)?;
    let pca_choice = indicator_state(&result);
    let mut warnings = result.warnings.clone();
    let jacobian_choice = if dataset.dims() == system.state_dim() {
        match jacobian_indicator(system.as_ref(), &x0) {
            Ok(c) => Some(c),
            Err(e) => {
                warnings.push(format!("Jacobian analysis failed: {e}"));
                None
            }
        }
    } else {
        warnings
            .push("dataset dimension differs from the system; Jacobian analysis skipped".into());
        None
    };

    let mut header = vec!["component", "explained"];
    header.extend(dataset.labels().iter().map(String::as_str));
    let mut t = Table::new(&header);
    t.meta("standardized", result.standardized)
        .meta("steps", dataset.steps());
    for w in &warnings {
        t.meta("warning", w);
    }
    for k in 0..dataset.dims() {
        let mut row = vec![(k + 1).to_string(), num(result.explained[k])];
        row.extend(result.loadings.column(k).iter().map(|&v| num(v)));
        t.row(row);
    }
    t.write(&out.join("pca.csv"))?;

    let mut t = Table::new(&["method", "index", "label", "tie", "warnings"]);
    let mut add = |name: &str, c: &IndicatorChoice| {
        t.row(vec![
            name.to_string(),
            (c.index + 1).to_string(),
            dataset.labels()[c.index].clone(),
            c.tie.to_string(),
            c.warnings.join("; ").replace(',', ";"),
        ]);
    };
    add("pca", &pca_choice);
    if let Some(c) = &jacobian_choice {
        add("jacobian", c);
    }
    t.meta("index_base", 1);
    t.write(&out.join("indicator.csv"))?;

    Ok(ReductionOutput {
        dataset,
        pca: result,
        pca_choice,
        jacobian_choice,
        warnings,
    })
}

/// Raw noisy trajectories, one ChaCha stream per run.
pub fn simulate(cfg: &AnalysisConfig, out: &Path) -> Result<usize> {
    let out = prepare_output(out)?;
    let system = cfg.build_system()?;
    let noise = cfg.build_noise(system.as_ref())?;
    let factor = noise_factor(&noise)?;
    let sc = &cfg.simulation;
    let x0 = initial_state(system.as_ref(), &sc.x0);
    let d = system.state_dim();

    let mut header = vec![
        "run".to_string(),
        "step".to_string(),
        "absorbed".to_string(),
    ];
    header.extend((1..=d).map(|i| format!("x{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&header);
    common_meta(&mut t, cfg, system.as_ref());
    let mut rows = 0;
    for run in 0..sc.runs {
        let mut rng = stream_rng(cfg.estimator.seed, run as u64);
        let mut x = x0.clone();
        let record = |step: usize, absorbed: bool, x: &StateVector, t: &mut Table| {
            let mut row = vec![run.to_string(), step.to_string(), absorbed.to_string()];
            row.extend(
                x.iter()
                    .map(|&v| if absorbed { String::new() } else { num(v) }),
            );
            t.row(row);
        };
        record(0, false, &x, &mut t);
        rows += 1;
        for step in 1..=sc.steps {
            let z = DVector::from_fn(noise.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
            rows += 1;
            match system.step(&x, &(&factor * z)) {
                StepOutcome::Alive(next) => {
                    record(step, false, &next, &mut t);
                    x = next;
                }
                StepOutcome::Absorbed => {
                    record(step, true, &x, &mut t);
                    break;
                }
            }
        }
    }
    t.write(&out.join("trajectory.csv"))?;
    Ok(rows)
}
