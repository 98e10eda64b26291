//! Command bodies. Each takes a resolved config and an output directory.

use std::collections::BTreeSet;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use bvsel_core::bayes::{MarginalKind, ModelPrior, ModelSpacePrior, SparsityPrior};
use bvsel_core::diagnostics::{diagnose, DiagnoseOptions};
use bvsel_core::experiments::{
    consistency_cell, generate, overfit_class_experiment, ConsistencyCell, ConsistencyCurve, PosteriorMethod,
    Truth,
};
use bvsel_core::linalg::{Dataset, ModelIndex};
use bvsel_core::numeric::{count_subsets_up_to, median};
use bvsel_core::search::{enumerate_with, search_with, ModelScorer, SearchConfig, ENUMERATION_BUDGET};
use bvsel_core::seeding::{derive_seed, derive_seed2, rng_from_seed};
use bvsel_core::stablelaw::{
    hill_tail_index, ks_distance, normalized_sums, sample_delta, stable_cdf, ReferenceCdf, StableSimConfig,
    EULER_GAMMA,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{
    ConsistencyConfig, DataConfig, DiagnoseConfig, Manifest, OverfitConfig, PriorKind, SearchMode, SelectConfig,
    StableConfig, MANIFEST_FILE,
};
use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, fmt_f64, read_design, read_text, write_csv, write_json, write_matrix};

fn write_manifest(out: &Path, manifest: &Manifest) -> CliResult<()> {
    let path = out.join(MANIFEST_FILE);
    std::fs::write(&path, manifest.to_toml()?).map_err(|e| CliError::io(path, e))
}

fn model_cell(m: &ModelIndex) -> String {
    m.to_one_based()
}

/// Truth sidecar: 1-based indices plus the realized constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub t: Vec<usize>,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_min_hat: Option<f64>,
}

impl TruthFile {
    fn into_truth(self, p: usize) -> CliResult<Truth> {
        if self.beta.len() != p {
            return Err(CliError::Input(format!("truth has {} coefficients, design has {p} columns", self.beta.len())));
        }
        if self.t.iter().any(|&j| j == 0 || j > p) {
            return Err(CliError::Input(format!("truth indices must lie in 1..={p}")));
        }
        let t = ModelIndex::new(self.t.iter().map(|j| j - 1).collect())?;
        Ok(Truth { t, beta: self.beta, sigma2: self.sigma2 })
    }
}

#[derive(Serialize)]
struct SelectSummary {
    n: usize,
    p: usize,
    method: &'static str,
    map_model: String,
    map_mass: f64,
    visited_models: usize,
    log_normalizer: f64,
    acceptance_rate: Option<f64>,
    warnings: Vec<String>,
}

pub fn select(cfg: &SelectConfig, out: &Path, threads: Option<usize>) -> CliResult<()> {
    let seed = cfg.seed.expect("resolved");
    let (x, y) = read_design(&cfg.x, &cfg.y)?;
    let ds = Dataset::new(x, y)?;
    let s_max = ds.p().min(ds.n() - 3);
    let (prior, marginal) = match cfg.prior {
        PriorKind::BetaPrime => {
            (ModelSpacePrior::Poisson(ModelPrior::new(cfg.lambda, ds.p(), ds.n())?), MarginalKind::BetaPrime)
        }
        PriorKind::Zs => {
            (ModelSpacePrior::Poisson(ModelPrior::new(cfg.lambda, ds.p(), ds.n())?), MarginalKind::ZellnerSiow)
        }
        PriorKind::Sparsity => {
            (ModelSpacePrior::Sparsity(SparsityPrior::new(cfg.c2_exponent, ds.p(), s_max)?), MarginalKind::BetaPrime)
        }
    };
    let scorer = ModelScorer::new(&ds, prior, marginal);
    let cap = cfg.size_cap.unwrap_or(usize::MAX).min(scorer.max_size());
    let enumerate = match cfg.mode {
        SearchMode::Enumerate => true,
        SearchMode::Mh => false,
        SearchMode::Auto => count_subsets_up_to(ds.p(), cap) <= ENUMERATION_BUDGET,
    };
    let post = if enumerate {
        enumerate_with(&scorer, cap, None)?
    } else {
        let sc = SearchConfig {
            iterations: cfg.iters,
            burn_in: cfg.burn_in,
            seed,
            chains: cfg.chains,
            size_cap: cfg.size_cap,
            ..SearchConfig::default()
        };
        search_with(&scorer, &sc)?
    };
    ensure_dir(out)?;
    write_csv(
        &out.join("model_masses.csv"),
        &["model", "size", "mass", "log_score"],
        post.model_masses.iter().map(|(m, w)| {
            vec![model_cell(m), m.len().to_string(), fmt_f64(*w), fmt_f64(post.log_scores[m])]
        }),
    )?;
    write_csv(
        &out.join("inclusion.csv"),
        &["variable", "probability"],
        post.inclusion_probs.iter().enumerate().map(|(j, v)| vec![(j + 1).to_string(), fmt_f64(*v)]),
    )?;
    write_json(
        &out.join("summary.json"),
        &SelectSummary {
            n: ds.n(),
            p: ds.p(),
            method: if enumerate { "enumeration" } else { "search" },
            map_model: model_cell(&post.map_model),
            map_mass: post.mass(&post.map_model),
            visited_models: post.visited_count,
            log_normalizer: post.log_normalizer,
            acceptance_rate: post.acceptance_rate,
            warnings: post.warnings.clone(),
        },
    )?;
    for w in &post.warnings {
        eprintln!("warning: {w}");
    }
    let mut m = Manifest::new("select", threads);
    m.select = Some(cfg.clone());
    write_manifest(out, &m)
}

pub fn diagnose_cmd(cfg: &DiagnoseConfig, out: &Path, threads: Option<usize>) -> CliResult<()> {
    let (x, y) = read_design(&cfg.x, &cfg.y)?;
    let ds = Dataset::new(x, y)?;
    let truth = match &cfg.truth {
        Some(path) => {
            let tf: TruthFile = serde_json::from_str(&read_text(path)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            Some(tf.into_truth(ds.p())?)
        }
        None => None,
    };
    let opts = DiagnoseOptions {
        zeta_subset_size: cfg.zeta_subset_size,
        zeta_samples: cfg.zeta_samples,
        mc_draws: cfg.mc_draws,
        superset_cap: cfg.superset_cap,
        v_constant: cfg.v_constant,
        seed: cfg.seed.expect("resolved"),
    };
    let report = diagnose(&ds, truth.as_ref(), &opts)?;
    ensure_dir(out)?;
    write_json(&out.join("diagnostics.json"), &report)?;
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    let mut m = Manifest::new("diagnose", threads);
    m.diagnose = Some(cfg.clone());
    write_manifest(out, &m)
}

pub fn gen_data(cfg: &DataConfig, out: &Path, threads: Option<usize>) -> CliResult<()> {
    let syn = generate(&cfg.synthetic())?;
    ensure_dir(out)?;
    write_matrix(&out.join("X.csv"), "x", syn.dataset.x())?;
    write_csv(&out.join("y.csv"), &["y"], syn.dataset.y().iter().map(|v| vec![fmt_f64(*v)]))?;
    let tf = TruthFile {
        t: syn.truth.t.iter().map(|j| j + 1).collect(),
        beta: syn.truth.beta.clone(),
        sigma2: syn.truth.sigma2,
        c1: Some(syn.c1),
        c2: Some(syn.c2),
        zeta_min_hat: syn.zeta_min_hat,
    };
    write_json(&out.join("truth.json"), &tf)?;
    let mut m = Manifest::new("gen-data", threads);
    m.gen_data = Some(cfg.clone());
    write_manifest(out, &m)
}

const CELL_HEADER: [&str; 10] =
    ["n", "seed_index", "seed", "p", "t_size", "posterior_true", "map_is_true", "map_size", "method", "error"];

fn cell_row(c: &ConsistencyCell) -> Vec<String> {
    vec![
        c.n.to_string(),
        c.seed_index.to_string(),
        c.seed.to_string(),
        c.p.to_string(),
        c.t_size.to_string(),
        fmt_f64(c.posterior_true),
        c.map_is_true.to_string(),
        c.map_size.to_string(),
        match c.method {
            PosteriorMethod::Enumeration => "enumeration".into(),
            PosteriorMethod::Search => "search".into(),
        },
        c.error.clone().unwrap_or_default(),
    ]
}

fn parse_cell_row(rec: &csv::StringRecord) -> Option<ConsistencyCell> {
    if rec.len() != CELL_HEADER.len() {
        return None;
    }
    let f = |i: usize| rec.get(i).unwrap_or("");
    Some(ConsistencyCell {
        n: f(0).parse().ok()?,
        seed_index: f(1).parse().ok()?,
        seed: f(2).parse().ok()?,
        p: f(3).parse().ok()?,
        t_size: f(4).parse().ok()?,
        posterior_true: f(5).parse().ok()?,
        map_is_true: f(6).parse().ok()?,
        map_size: f(7).parse().ok()?,
        method: match f(8) {
            "enumeration" => PosteriorMethod::Enumeration,
            "search" => PosteriorMethod::Search,
            _ => return None,
        },
        error: Some(f(9).to_string()).filter(|s| !s.is_empty()),
    })
}

/// Cells already present in `path`; truncated trailing rows are dropped.
fn completed_cells(path: &Path) -> Vec<ConsistencyCell> {
    let Ok(mut rdr) = csv::ReaderBuilder::new().flexible(true).from_path(path) else {
        return Vec::new();
    };
    rdr.records().filter_map(|r| r.ok()).filter_map(|r| parse_cell_row(&r)).collect()
}

/// Runs the grid, skipping cells already recorded in `out/cells.csv` by a
/// run with the same configuration.
pub fn consistency(cfg: &ConsistencyConfig, out: &Path, threads: Option<usize>) -> CliResult<()> {
    if cfg.n_grid.is_empty() || cfg.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Input(format!("n grid must be non-empty and increasing: {:?}", cfg.n_grid)));
    }
    let search = SearchConfig {
        iterations: cfg.iters,
        burn_in: cfg.burn_in,
        chains: cfg.chains,
        ..SearchConfig::default()
    };
    search.validate()?;
    ensure_dir(out)?;
    let manifest_path = out.join(MANIFEST_FILE);
    let cells_path = out.join("cells.csv");
    let mut done = Vec::new();
    if manifest_path.exists() && cells_path.exists() {
        let old = Manifest::load(&manifest_path)?;
        if old.consistency.as_ref() == Some(cfg) {
            done = completed_cells(&cells_path);
        }
    }
    let mut m = Manifest::new("consistency", threads);
    m.consistency = Some(cfg.clone());
    write_manifest(out, &m)?;

    let have: BTreeSet<(usize, usize)> = done.iter().map(|c| (c.n, c.seed_index)).collect();
    let jobs: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.seeds).map(move |s| (n, s)))
        .filter(|j| !have.contains(j))
        .collect();
    if !have.is_empty() {
        eprintln!("resuming: {} cells reused, {} to run", have.len(), jobs.len());
    }
    // rewrite what survived so the journal is well-formed before appending
    write_csv(&cells_path, &CELL_HEADER, done.iter().map(cell_row))?;
    let journal = OpenOptions::new().append(true).open(&cells_path).map_err(|e| CliError::io(&cells_path, e))?;
    let journal = Mutex::new(journal);
    let base = cfg.data.synthetic();
    let fresh: Vec<ConsistencyCell> = jobs
        .par_iter()
        .map(|&(n, s)| -> CliResult<ConsistencyCell> {
            let cell = consistency_cell(&base, n, s, &search, cfg.lambda);
            let mut line = Vec::new();
            {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(&mut line);
                w.write_record(cell_row(&cell)).map_err(|e| CliError::Input(e.to_string()))?;
            }
            let mut f = journal.lock().expect("journal lock");
            f.write_all(&line).and_then(|_| f.flush()).map_err(|e| CliError::io(&cells_path, e))?;
            Ok(cell)
        })
        .collect::<CliResult<_>>()?;
    let mut cells = done;
    cells.extend(fresh);
    cells.sort_by_key(|c| (c.n, c.seed_index));
    let curve = ConsistencyCurve::from_cells(&cfg.n_grid, cells);
    write_csv(&cells_path, &CELL_HEADER, curve.cells.iter().map(cell_row))?;
    let medians = curve.median_posterior();
    write_csv(
        &out.join("curve.csv"),
        &["x", "y", "group"],
        cfg.n_grid.iter().enumerate().flat_map(|(i, n)| {
            [
                vec![n.to_string(), fmt_f64(medians[i]), "median_posterior_true".into()],
                vec![n.to_string(), fmt_f64(curve.recovery_rate[i]), "map_recovery_rate".into()],
            ]
        }),
    )?;
    let failed = curve.cells.iter().filter(|c| c.error.is_some()).count();
    if failed > 0 {
        eprintln!("warning: {failed} cells failed; see the error column of cells.csv");
    }
    Ok(())
}

pub fn overfit_class(cfg: &OverfitConfig, out: &Path, threads: Option<usize>) -> CliResult<()> {
    if cfg.n_grid.is_empty() {
        return Err(CliError::Input("n grid must be non-empty".into()));
    }
    let base = cfg.data.synthetic();
    let jobs: Vec<(usize, usize)> =
        cfg.n_grid.iter().flat_map(|&n| (0..cfg.seeds).map(move |s| (n, s))).collect();
    let rows: Vec<(usize, usize, u64, Result<_, String>)> = jobs
        .par_iter()
        .map(|&(n, s)| {
            let seed = derive_seed2(base.seed, n as u64, s as u64);
            let sc = bvsel_core::experiments::SyntheticConfig { n, seed, ..base.clone() };
            let r = overfit_class_experiment(&sc, cfg.c, cfg.controlled, cfg.lambda, cfg.samples);
            (n, s, seed, r.map_err(|e| e.to_string()))
        })
        .collect();
    ensure_dir(out)?;
    let nan = fmt_f64(f64::NAN);
    write_csv(
        &out.join("class_stats.csv"),
        &[
            "n", "seed_index", "seed", "p", "t_size", "c", "class_size", "evaluated", "exact", "h_stat", "mean_bf",
            "log_sum_odds", "log_prior_factor", "error",
        ],
        rows.iter().map(|(n, s, seed, r)| match r {
            Ok(st) => vec![
                n.to_string(),
                s.to_string(),
                seed.to_string(),
                st.p.to_string(),
                st.t_size.to_string(),
                st.c.to_string(),
                st.class_size.to_string(),
                st.evaluated.to_string(),
                st.exact.to_string(),
                fmt_f64(st.h_stat),
                fmt_f64(st.mean_bf),
                fmt_f64(st.log_sum_odds),
                fmt_f64(st.log_prior_factor),
                String::new(),
            ],
            Err(e) => {
                let mut v = vec![n.to_string(), s.to_string(), seed.to_string()];
                v.extend(std::iter::repeat_n(String::new(), 5));
                v.extend(std::iter::repeat_n(nan.clone(), 4));
                v.push(e.clone());
                v
            }
        }),
    )?;
    let group = format!("c={}", cfg.c);
    let mut long = Vec::new();
    for &n in &cfg.n_grid {
        let h: Vec<f64> =
            rows.iter().filter(|r| r.0 == n).filter_map(|r| r.3.as_ref().ok()).map(|st| st.h_stat).collect();
        long.push(vec![n.to_string(), fmt_f64(median(&h)), group.clone()]);
    }
    write_csv(&out.join("h_sweep.csv"), &["x", "y", "group"], long)?;
    let mut m = Manifest::new("overfit-class", threads);
    m.overfit_class = Some(cfg.clone());
    write_manifest(out, &m)
}

#[derive(Serialize)]
struct StableSummary {
    c: u32,
    m: usize,
    replicates: usize,
    ks_unit_reference: f64,
    ks_limit_reference: f64,
    ks_symmetric_cauchy: f64,
    limit_scale: f64,
    limit_location: f64,
    hill_tail_index: Option<f64>,
    hill_error: Option<String>,
}

pub fn stable_sim(cfg: &StableConfig, out: &Path, threads: Option<usize>) -> CliResult<()> {
    let seed = cfg.seed.expect("resolved");
    let sim = StableSimConfig { c: cfg.c, m: cfg.m, replicates: cfg.replicates, seed };
    if cfg.bins == 0 {
        return Err(CliError::Input("bins must be positive".into()));
    }
    let sums = normalized_sums(&sim)?;
    let unit = ReferenceCdf::unit_totally_skewed()?;
    let limit_scale = std::f64::consts::FRAC_PI_2;
    let limit_location = 1.0 - EULER_GAMMA;
    let limit = ReferenceCdf::new(1.0, limit_scale, limit_location, -20.0, 120.0)?;
    let ks = ks_distance(&sums, |x| unit.eval(x))?;
    let ks_limit = ks_distance(&sums, |x| limit.eval(x))?;
    let ks_cauchy = ks_distance(&sums, |x| stable_cdf(x, 1.0, 0.0))?;
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let (hill, hill_error) = match sample_delta(&sim, &mut rng).and_then(|d| hill_tail_index(&d, cfg.k_frac)) {
        Ok(h) => (Some(h), None),
        Err(e) => (None, Some(e.to_string())),
    };

    ensure_dir(out)?;
    write_csv(
        &out.join("sums.csv"),
        &["replicate", "normalized_sum"],
        sums.iter().enumerate().map(|(r, v)| vec![r.to_string(), fmt_f64(*v)]),
    )?;
    let mut sorted = sums.clone();
    sorted.sort_by(f64::total_cmp);
    let q = |f: f64| sorted[((sorted.len() - 1) as f64 * f).round() as usize];
    let (lo, hi) = (q(0.01), q(0.99));
    let width = (hi - lo) / cfg.bins as f64;
    let mut counts = vec![0usize; cfg.bins];
    for &v in &sums {
        if v >= lo && v <= hi && width > 0.0 {
            counts[(((v - lo) / width) as usize).min(cfg.bins - 1)] += 1;
        }
    }
    let total = sums.len() as f64;
    write_csv(
        &out.join("histogram.csv"),
        &["bin_lo", "bin_hi", "count", "density", "ks", "ks_limit"],
        counts.iter().enumerate().map(|(i, &k)| {
            let a = lo + i as f64 * width;
            vec![
                fmt_f64(a),
                fmt_f64(a + width),
                k.to_string(),
                fmt_f64(k as f64 / (total * width)),
                fmt_f64(ks),
                fmt_f64(ks_limit),
            ]
        }),
    )?;
    let grid: Vec<f64> = (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).collect();
    let cdf_rows: Vec<Vec<String>> = grid
        .iter()
        .map(|&x| -> CliResult<Vec<String>> {
            let emp = sorted.partition_point(|v| *v <= x) as f64 / total;
            Ok(vec![fmt_f64(x), fmt_f64(emp), fmt_f64(unit.eval(x)?), fmt_f64(limit.eval(x)?)])
        })
        .collect::<CliResult<_>>()?;
    write_csv(&out.join("cdf.csv"), &["x", "empirical", "unit_reference", "limit_reference"], cdf_rows)?;
    write_json(
        &out.join("summary.json"),
        &StableSummary {
            c: cfg.c,
            m: cfg.m,
            replicates: cfg.replicates,
            ks_unit_reference: ks,
            ks_limit_reference: ks_limit,
            ks_symmetric_cauchy: ks_cauchy,
            limit_scale,
            limit_location,
            hill_tail_index: hill,
            hill_error,
        },
    )?;
    let mut m = Manifest::new("stable-sim", threads);
    m.stable_sim = Some(cfg.clone());
    write_manifest(out, &m)
}

/// Re-executes the run recorded in a manifest.
pub fn replay(manifest: &Manifest, out: &Path, threads: Option<usize>) -> CliResult<()> {
    let missing = || CliError::Input(format!("manifest for '{}' lacks its configuration table", manifest.command));
    match manifest.command.as_str() {
        "select" => select(manifest.select.as_ref().ok_or_else(missing)?, out, threads),
        "diagnose" => diagnose_cmd(manifest.diagnose.as_ref().ok_or_else(missing)?, out, threads),
        "gen-data" => gen_data(manifest.gen_data.as_ref().ok_or_else(missing)?, out, threads),
        "consistency" => consistency(manifest.consistency.as_ref().ok_or_else(missing)?, out, threads),
        "overfit-class" => overfit_class(manifest.overfit_class.as_ref().ok_or_else(missing)?, out, threads),
        "stable-sim" => stable_sim(manifest.stable_sim.as_ref().ok_or_else(missing)?, out, threads),
        other => Err(CliError::Input(format!("unknown command '{other}' in manifest"))),
    }
}

pub fn default_out(manifest_path: &Path) -> PathBuf {
    manifest_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
}
