//! Batch front end for `cca-core`: loads two views (CSV files or a synthetic
//! recipe), runs one analysis and writes `report.json` plus CSV side files.

pub mod args;
mod csvio;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cca_core::dataset::{generate_synthetic, PairedDataset, RecipeId, SyntheticRecipe};
use cca_core::evaluation::{biplot_export, generalization_test, sequential_test_with, View};
use cca_core::kernel::{
    center_gram, cross_validate_kernel, fit_kernel_cca, fit_kernel_cca_pgso, gram, image_relation_table,
    median_heuristic, GramPair, KernelCcaModel, KernelSpec, RelationTable,
};
use cca_core::linear::{fit, CcaModel, Solver};
use cca_core::regularized::{cross_validate, fit_regularized_data, parse_grid, RegularizationConfig, TestScaling};
use cca_core::sparse::{default_budget, default_penalty, fit_pmd, fit_primal_dual, scan_basis_all};
use cca_core::CcaError;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use args::*;

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input, violated preconditions.
    Config(String),
    /// The analysis itself failed (singular blocks, indefinite kernels, ...).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CcaError> for CliError {
    fn from(e: CcaError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Runs one invocation and returns the output directory.
pub fn run(cli: Cli) -> Result<PathBuf> {
    match cli.threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {t} worker threads: {e}")))?
            .install(|| execute(cli.command)),
        None => execute(cli.command),
    }
}

/// Everything a command produces, written only once the analysis succeeded.
struct Outcome {
    config: Value,
    results: Value,
    data: Option<Value>,
    files: Vec<(String, String)>,
}

fn execute(command: Command) -> Result<PathBuf> {
    let start = Instant::now();
    let (name, common) = match &command {
        Command::Fit(a) => ("fit", &a.common),
        Command::Cv(a) => ("cv", &a.common),
        Command::Kcca(a) => ("kcca", &a.common),
        Command::Pmd(a) => ("pmd", &a.common),
        Command::Pdscca(a) => ("pdscca", &a.common),
        Command::Test(a) => ("test", &a.common),
        Command::Biplot(a) => ("biplot", &a.common),
        Command::Simulate(a) => ("simulate", &a.common),
    };
    let seed = common.seed.unwrap_or(0);
    let out = common.out.clone();
    let outcome = match &command {
        Command::Fit(a) => cmd_fit(a, seed)?,
        Command::Cv(a) => cmd_cv(a, seed)?,
        Command::Kcca(a) => cmd_kcca(a, seed)?,
        Command::Pmd(a) => cmd_pmd(a, seed)?,
        Command::Pdscca(a) => cmd_pdscca(a, seed)?,
        Command::Test(a) => cmd_test(a, seed)?,
        Command::Biplot(a) => cmd_biplot(a, seed)?,
        Command::Simulate(a) => cmd_simulate(a, seed)?,
    };
    let mut report = Map::new();
    report.insert("command".into(), json!(name));
    report.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    report.insert("seed".into(), json!(seed));
    report.insert("config".into(), outcome.config);
    if let Some(data) = outcome.data {
        report.insert("data".into(), data);
    }
    report.insert("results".into(), outcome.results);
    let mut names: Vec<&str> = outcome.files.iter().map(|(n, _)| n.as_str()).collect();
    names.push(REPORT_FILE);
    report.insert("outputs".into(), json!(names));
    report.insert("timing_seconds".into(), json!(start.elapsed().as_secs_f64()));
    let mut text = serde_json::to_string_pretty(&Value::Object(report)).expect("report serialises");
    text.push('\n');

    let mut files = outcome.files;
    files.push((REPORT_FILE.to_string(), text));
    write_outputs(&out, &files)?;
    Ok(out)
}

/// Writes every file or none: on failure, files written so far (and the
/// directory, if this call created it) are removed.
fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<()> {
    let created = !dir.exists();
    if created {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
    }
    let mut written = Vec::new();
    for (name, content) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, content) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created {
                let _ = fs::remove_dir_all(dir);
            }
            return Err(CliError::Config(format!("cannot write {}: {e}", path.display())));
        }
        written.push(path);
    }
    Ok(())
}

struct Loaded {
    raw: PairedDataset,
    standardized: PairedDataset,
    recipe: Option<SyntheticRecipe>,
    summary: Value,
}

fn parse_recipe(id: &str, n: Option<usize>, seed: u64) -> Result<SyntheticRecipe> {
    let id: RecipeId = id.parse()?;
    let recipe = SyntheticRecipe::preset(id, seed);
    Ok(match n {
        Some(n) => recipe.with_n(n),
        None => recipe,
    })
}

fn load(data: &DataArgs, seed: u64) -> Result<Loaded> {
    let (raw, recipe, source) = match (&data.recipe, &data.view_a, &data.view_b) {
        (Some(id), None, None) => {
            let recipe = parse_recipe(id, data.n, seed)?;
            let raw = recipe.generate_raw()?;
            let source = json!({ "recipe": recipe.id.as_str() });
            (raw, Some(recipe), source)
        }
        (None, Some(pa), Some(pb)) => {
            if data.n.is_some() {
                return Err(CliError::Config("--n only applies to --recipe".into()));
            }
            let (a, names_a) = csvio::read_view(pa)?;
            let (b, names_b) = csvio::read_view(pb)?;
            let raw = PairedDataset::with_names(a, b, names_a, names_b)?;
            let source = json!({ "view_a": pa.display().to_string(), "view_b": pb.display().to_string() });
            (raw, None, source)
        }
        (None, None, None) => {
            return Err(CliError::Config(
                "no data: give --view-a and --view-b, or --recipe".into(),
            ))
        }
        _ => {
            return Err(CliError::Config(
                "give exactly one data source: both --view-a and --view-b, or --recipe alone".into(),
            ))
        }
    };
    let standardized = raw.standardize()?;
    let summary = json!({
        "source": source,
        "n": raw.n(),
        "p": raw.p(),
        "q": raw.q(),
        "names_a": raw.names_a(),
        "names_b": raw.names_b(),
    });
    Ok(Loaded {
        raw,
        standardized,
        recipe,
        summary,
    })
}

fn solver(s: SolverArg) -> Solver {
    match s {
        SolverArg::Eig => Solver::Eig,
        SolverArg::Geneig => Solver::GenEig,
        SolverArg::Svd => Solver::Svd,
    }
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn vector(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn linear_results(model: &CcaModel) -> Value {
    json!({
        "solver": model.solver.as_str(),
        "ridge": { "c1": model.ridge.0, "c2": model.ridge.1 },
        "correlations": vector(&model.correlations),
        "weights_a": columns(&model.weights_a),
        "weights_b": columns(&model.weights_b),
    })
}

fn linear_files(model: &CcaModel, data: &PairedDataset) -> Vec<(String, String)> {
    vec![
        ("weights_a.csv".into(), csvio::weights_csv(data.names_a(), &model.weights_a, "w")),
        ("weights_b.csv".into(), csvio::weights_csv(data.names_b(), &model.weights_b, "w")),
    ]
}

fn components_or_default(r: Option<usize>, data: &PairedDataset) -> usize {
    r.unwrap_or_else(|| data.p().min(data.q()))
}

fn cmd_fit(a: &FitArgs, seed: u64) -> Result<Outcome> {
    let loaded = load(&a.data, seed)?;
    let d = &loaded.standardized;
    let r = components_or_default(a.components, d);
    let model = if a.c1 != 0.0 || a.c2 != 0.0 {
        fit_regularized_data(d, a.c1, a.c2, r)?
    } else {
        fit(d, solver(a.solver), r)?
    };
    Ok(Outcome {
        config: json!({ "solver": solver(a.solver).as_str(), "components": r, "c1": a.c1, "c2": a.c2 }),
        results: linear_results(&model),
        data: Some(loaded.summary),
        files: linear_files(&model, d),
    })
}

fn grid(spec: &str, flag: &str) -> Result<Vec<f64>> {
    parse_grid(spec).map_err(|e| CliError::Config(format!("{flag}: {e}")))
}

fn cmd_cv(a: &CvArgs, seed: u64) -> Result<Outcome> {
    let loaded = load(&a.data, seed)?;
    let d = &loaded.standardized;
    let config = RegularizationConfig {
        c1_grid: grid(&a.grid_c1, "--grid-c1")?,
        c2_grid: grid(&a.grid_c2, "--grid-c2")?,
        folds: a.folds,
        repetitions: a.repetitions,
        seed,
        test_scaling: match a.test_scaling {
            ScalingArg::Own => TestScaling::OwnStatistics,
            ScalingArg::Training => TestScaling::TrainingStatistics,
        },
    };
    let surface = cross_validate(d, &config)?;
    let r = components_or_default(a.components, d);
    let (c1, c2) = surface.selected;
    let model = fit_regularized_data(d, c1, c2, r)?;
    let mut files = vec![("cv_surface.csv".to_string(), surface.to_csv())];
    files.extend(linear_files(&model, d));
    Ok(Outcome {
        config: json!({
            "grid_c1": config.c1_grid,
            "grid_c2": config.c2_grid,
            "folds": config.folds,
            "repetitions": config.repetitions,
            "test_scaling": a.test_scaling.to_possible_value().map(|v| v.get_name().to_string()),
            "components": r,
        }),
        results: json!({
            "selected": { "c1": c1, "c2": c2 },
            "selected_score": surface.selected_score,
            "refit": linear_results(&model),
        }),
        data: Some(loaded.summary),
        files,
    })
}

use clap::ValueEnum as _;

fn kernel_spec(kind: KernelArg, sigma: Option<f64>, x: &DMatrix<f64>) -> Result<KernelSpec> {
    Ok(match kind {
        KernelArg::Linear => KernelSpec::Linear,
        KernelArg::Gaussian => KernelSpec::Gaussian {
            sigma: match sigma {
                Some(s) => s,
                None => median_heuristic(x)?,
            },
        },
    })
}

fn relation_json(t: &RelationTable) -> Value {
    json!({
        "signals": t.signals,
        "correlations": (0..t.signed.nrows()).map(|i| t.signed.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

/// Relation tables of the planted signals against both image sets.
fn relation_tables(loaded: &Loaded, model: &KernelCcaModel) -> Result<Option<(RelationTable, RelationTable)>> {
    let Some(recipe) = &loaded.recipe else {
        return Ok(None);
    };
    if recipe.relations.is_empty() {
        return Ok(None);
    }
    let signals_a = recipe.planted_signals(&loaded.raw);
    let signals_b: Vec<(String, DVector<f64>)> = recipe
        .relations
        .iter()
        .map(|r| (loaded.raw.names_b()[r.target].clone(), loaded.raw.view_b().column(r.target).into_owned()))
        .collect();
    Ok(Some((
        image_relation_table(&model.images_a, &signals_a)?,
        image_relation_table(&model.images_b, &signals_b)?,
    )))
}

fn cmd_kcca(a: &KccaArgs, seed: u64) -> Result<Outcome> {
    let loaded = load(&a.data, seed)?;
    let d = &loaded.standardized;
    let spec_a = kernel_spec(a.kernel, a.sigma_a, d.view_a())?;
    let spec_b = kernel_spec(a.kernel, a.sigma_b, d.view_b())?;
    let grams = GramPair::from_data(d, spec_a, spec_b, !a.no_center)?;
    let mut files = Vec::new();
    let mut cv = Value::Null;
    let (mut c1, mut c2) = (a.c1, a.c2);
    if let (Some(g1), Some(g2)) = (&a.grid_c1, &a.grid_c2) {
        if a.method == MethodArg::Pgso {
            return Err(CliError::Config("kernel cross-validation is only offered for --method direct".into()));
        }
        let config = RegularizationConfig {
            c1_grid: grid(g1, "--grid-c1")?,
            c2_grid: grid(g2, "--grid-c2")?,
            folds: a.folds,
            repetitions: a.repetitions,
            seed,
            ..Default::default()
        };
        let surface = cross_validate_kernel(d, spec_a, spec_b, &config)?;
        (c1, c2) = surface.selected;
        cv = json!({ "selected": { "c1": c1, "c2": c2 }, "selected_score": surface.selected_score });
        files.push(("cv_surface.csv".to_string(), surface.to_csv()));
    }
    let model = match a.method {
        MethodArg::Direct => fit_kernel_cca(&grams, c1, c2, a.components)?,
        MethodArg::Pgso => fit_kernel_cca_pgso(&grams, a.kappa, a.eta, a.components)?,
    };
    let r = model.components();
    let mut header: Vec<String> = (1..=r).map(|i| format!("alpha{i}")).collect();
    header.extend((1..=r).map(|i| format!("beta{i}")));
    let mut duals = DMatrix::zeros(grams.n(), 2 * r);
    duals.columns_mut(0, r).copy_from(&model.alpha);
    duals.columns_mut(r, r).copy_from(&model.beta);
    files.push(("dual_weights.csv".into(), csvio::matrix_csv(&header, &duals)));
    let mut header: Vec<String> = (1..=r).map(|i| format!("za_{i}")).collect();
    header.extend((1..=r).map(|i| format!("zb_{i}")));
    let mut images = DMatrix::zeros(grams.n(), 2 * r);
    images.columns_mut(0, r).copy_from(&model.images_a);
    images.columns_mut(r, r).copy_from(&model.images_b);
    files.push(("images.csv".into(), csvio::matrix_csv(&header, &images)));

    let mut results = Map::new();
    results.insert("correlations".into(), json!(vector(&model.correlations)));
    results.insert("kernel_a".into(), json!(spec_a));
    results.insert("kernel_b".into(), json!(spec_b));
    results.insert("regularization".into(), json!(model.regularization));
    if !cv.is_null() {
        results.insert("cv".into(), cv);
    }
    if let Some((ta, tb)) = relation_tables(&loaded, &model)? {
        files.push(("relations_a.csv".into(), ta.to_csv()));
        files.push(("relations_b.csv".into(), tb.to_csv()));
        results.insert("relations_a".into(), relation_json(&ta));
        results.insert("relations_b".into(), relation_json(&tb));
    }
    Ok(Outcome {
        config: json!({
            "kernel": a.kernel.to_possible_value().map(|v| v.get_name().to_string()),
            "centered": !a.no_center,
            "method": a.method.to_possible_value().map(|v| v.get_name().to_string()),
            "c1": a.c1,
            "c2": a.c2,
            "kappa": a.kappa,
            "eta": a.eta,
            "grid_c1": a.grid_c1,
            "grid_c2": a.grid_c2,
            "components": a.components,
        }),
        results: Value::Object(results),
        data: Some(loaded.summary),
        files,
    })
}

fn cmd_pmd(a: &PmdArgs, seed: u64) -> Result<Outcome> {
    let loaded = load(&a.data, seed)?;
    let d = &loaded.standardized;
    let c1 = a.c1.unwrap_or_else(|| default_budget(d.p()));
    let c2 = a.c2.unwrap_or_else(|| default_budget(d.q()));
    let res = fit_pmd(&d.covariance_blocks()?.cab, c1, c2, a.components)?;
    let (wa, wb) = (res.weights_a(), res.weights_b());
    let za = d.view_a() * &wa;
    let zb = d.view_b() * &wb;
    let components: Vec<Value> = res
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (ia, ib) = (c.w_a.iamax(), c.w_b.iamax());
            let (na, nb) = (za.column(i).norm(), zb.column(i).norm());
            let corr = if na > 0.0 && nb > 0.0 { za.column(i).dot(&zb.column(i)) / (na * nb) } else { 0.0 };
            json!({
                "sigma": c.sigma,
                "iterations": c.iterations,
                "converged": c.converged,
                "leading_a": d.names_a()[ia],
                "leading_b": d.names_b()[ib],
                "image_correlation": corr,
                "nonzero_a": c.w_a.iter().filter(|v| **v != 0.0).count(),
                "nonzero_b": c.w_b.iter().filter(|v| **v != 0.0).count(),
            })
        })
        .collect();
    Ok(Outcome {
        config: json!({ "c1": c1, "c2": c2, "components": a.components }),
        results: json!({ "components": components, "residual_norms": res.residual_norms }),
        data: Some(loaded.summary),
        files: vec![
            ("sparse_weights_a.csv".into(), csvio::weights_csv(d.names_a(), &wa, "w")),
            ("sparse_weights_b.csv".into(), csvio::weights_csv(d.names_b(), &wb, "w")),
        ],
    })
}

fn cmd_pdscca(a: &PdsccaArgs, seed: u64) -> Result<Outcome> {
    let loaded = load(&a.data, seed)?;
    let d = &loaded.standardized;
    let sigma = match a.sigma {
        Some(s) => s,
        None => median_heuristic(d.view_b())?,
    };
    let kb = center_gram(&gram(d.view_b(), KernelSpec::Gaussian { sigma })?).into_inner();
    let xa = d.view_a();
    let mu = a.mu.unwrap_or_else(|| default_penalty(xa, &kb));
    let gamma = a.gamma.unwrap_or_else(|| default_penalty(xa, &kb));
    let mut files = Vec::new();
    let best = match a.basis {
        Some(0) => return Err(CliError::Config("--basis is 1-based".into())),
        Some(k) => fit_primal_dual(xa, &kb, mu, gamma, k - 1)?,
        None => {
            let (best, all) = scan_basis_all(xa, &kb, mu, gamma)?;
            let mut scan = String::from("k,objective\n");
            for (k, f) in all.iter().enumerate() {
                match f {
                    Some(f) => scan.push_str(&format!("{},{f:.16e}\n", k + 1)),
                    None => scan.push_str(&format!("{},\n", k + 1)),
                }
            }
            files.push(("basis_scan.csv".into(), scan));
            best
        }
    };
    let w = DMatrix::from_column_slice(best.w_a.len(), 1, best.w_a.as_slice());
    files.push(("w_a.csv".into(), csvio::weights_csv(d.names_a(), &w, "w")));
    let beta = DMatrix::from_column_slice(best.beta.len(), 1, best.beta.as_slice());
    files.push(("beta.csv".into(), csvio::matrix_csv(&["beta".to_string()], &beta)));
    Ok(Outcome {
        config: json!({ "mu": mu, "gamma": gamma, "sigma": sigma, "basis": a.basis }),
        results: json!({
            "k": best.k + 1,
            "objective": best.objective,
            "correlation": best.correlation,
            "nonzero_weights": best.nonzero_weights(),
            "iterations": best.iterations,
            "converged": best.converged,
            "degenerate": best.degenerate,
        }),
        data: Some(loaded.summary),
        files,
    })
}

fn holdout_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CliError::Config(format!("--holdout must lie in (0, 1), got {fraction}")));
    }
    let test = ((n as f64) * fraction).round() as usize;
    if test < 2 || n - test < 2 {
        return Err(CliError::Config(format!(
            "--holdout {fraction} leaves fewer than two rows on one side of the split (n = {n})"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (mut te, mut tr) = (idx[..test].to_vec(), idx[test..].to_vec());
    te.sort_unstable();
    tr.sort_unstable();
    Ok((tr, te))
}

fn cmd_test(a: &TestArgs, seed: u64) -> Result<Outcome> {
    let loaded = load(&a.data, seed)?;
    let r = loaded.raw.p().min(loaded.raw.q());
    let (train, test) = match a.holdout {
        Some(f) => {
            let (tr, te) = holdout_split(loaded.raw.n(), f, seed)?;
            let train = loaded.raw.select_rows(&tr).standardize()?;
            let test = train.apply_standardization(&loaded.raw.select_rows(&te))?;
            (train, Some(test))
        }
        None => (loaded.standardized.clone(), None),
    };
    let model = fit(&train, solver(a.solver), r)?;
    let report = sequential_test_with(model.correlations.as_slice(), train.n(), train.p(), train.q(), a.alpha, a.clamp_unit)?;
    let mut results = Map::new();
    results.insert("correlations".into(), json!(vector(&model.correlations)));
    results.insert("significance".into(), json!(report));
    let mut files = vec![("significance.csv".to_string(), report.to_csv())];
    if let Some(test) = test {
        let scores = generalization_test(&model, &test)?;
        results.insert("training_rows".into(), json!(train.n()));
        results.insert("test_rows".into(), json!(test.n()));
        results.insert("test_correlations".into(), json!(vector(&scores)));
    }
    files.extend(linear_files(&model, &train));
    Ok(Outcome {
        config: json!({
            "solver": solver(a.solver).as_str(),
            "alpha": a.alpha,
            "clamp_unit": a.clamp_unit,
            "holdout": a.holdout,
        }),
        results: Value::Object(results),
        data: Some(loaded.summary),
        files,
    })
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let bad = || CliError::Config(format!("--images expects two 1-based indices like 1,2, got '{s}'"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(bad());
    }
    let i: usize = parts[0].parse().map_err(|_| bad())?;
    let j: usize = parts[1].parse().map_err(|_| bad())?;
    if i == 0 || j == 0 {
        return Err(bad());
    }
    Ok((i - 1, j - 1))
}

fn cmd_biplot(a: &BiplotArgs, seed: u64) -> Result<Outcome> {
    let (i, j) = parse_pair(&a.images)?;
    let loaded = load(&a.data, seed)?;
    let d = &loaded.standardized;
    let model = fit(d, solver(a.solver), d.p().min(d.q()))?;
    let view = match a.view {
        ViewArg::A => View::A,
        ViewArg::B => View::B,
    };
    let table = biplot_export(d, &model, (i, j), view)?;
    Ok(Outcome {
        config: json!({ "solver": solver(a.solver).as_str(), "images": [i + 1, j + 1], "view": view }),
        results: json!({ "correlations": vector(&model.correlations), "biplot": table.rows }),
        data: Some(loaded.summary),
        files: vec![("biplot.csv".into(), table.to_csv())],
    })
}

fn cmd_simulate(a: &SimulateArgs, seed: u64) -> Result<Outcome> {
    let recipe = parse_recipe(&a.recipe, a.n, seed)?;
    let d = generate_synthetic(&recipe)?;
    Ok(Outcome {
        config: json!({ "recipe": recipe.id.as_str(), "n": recipe.n, "p": recipe.p, "q": recipe.q }),
        results: json!({ "relations": recipe.relations }),
        data: None,
        files: vec![
            ("view_a.csv".into(), csvio::matrix_csv(d.names_a(), d.view_a())),
            ("view_b.csv".into(), csvio::matrix_csv(d.names_b(), d.view_b())),
        ],
    })
}
