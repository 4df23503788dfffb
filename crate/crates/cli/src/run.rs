use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mppstat::conformance::{limit_target, weight_limits};
use mppstat::error::Error;
use mppstat::est::{mu_hat_each, weighted_average, EstimateResult};
use mppstat::infer::{clt_statistic, estimate_s, CltConfig};
use mppstat::io::{load_pattern, save_pattern};
use mppstat::markfn::{MarkFunction, Registry};
use mppstat::oracle::{brute_force_mu, class_moments, mu_from_moments, BruteForceMode, Order};
use mppstat::pattern::{pair_count, Band, PointPattern, Window};
use mppstat::sim::{replicate_seed, sample_mixture};
use mppstat::stats;
use mppstat::weights::{compute_weights, WeightStrategy};

use crate::config::{weights_digest, EstimatorConfig, ExperimentConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub class_index: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub spec_hash: String,
    pub window: Vec<f64>,
    pub bounds_lo: Vec<f64>,
    pub bounds_hi: Vec<f64>,
    pub realizations: Vec<ManifestEntry>,
}

/// Writes one pattern file per realization and `manifest.json`.
pub fn simulate(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Manifest> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let bounds = cfg.sim_bounds()?;
    let reals = sample_mixture(&cfg.spec, &bounds, cfg.n_realizations, seed)?;
    let width = cfg.n_realizations.saturating_sub(1).to_string().len().max(5);
    let mut entries = Vec::with_capacity(reals.len());
    for (i, r) in reals.iter().enumerate() {
        let file = format!("pattern_{i:0width$}.csv");
        save_pattern(&r.pattern, &out.join(&file)).with_context(|| format!("writing {file}"))?;
        entries.push(ManifestEntry {
            file,
            class_index: r.class_index,
            seed: r.seed,
        });
    }
    let manifest = Manifest {
        seed,
        spec_hash: cfg.spec_hash(),
        window: cfg.window()?.extent().to_vec(),
        bounds_lo: bounds.lo().to_vec(),
        bounds_hi: bounds.hi().to_vec(),
        realizations: entries,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(out.join("manifest.json"), json + "\n").context("writing manifest.json")?;
    Ok(manifest)
}

/// Patterns listed in `dir/manifest.json`, or every `*.csv` in name order.
pub fn load_pattern_dir(dir: &Path) -> Result<Vec<PointPattern>> {
    let manifest = dir.join("manifest.json");
    let files: Vec<PathBuf> = if manifest.exists() {
        let m: Manifest = serde_json::from_str(&fs::read_to_string(&manifest)?).context("parsing manifest.json")?;
        m.realizations.iter().map(|e| dir.join(&e.file)).collect()
    } else {
        let mut v: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        v.sort();
        v
    };
    if files.is_empty() {
        bail!("no pattern files in {}", dir.display());
    }
    files
        .iter()
        .map(|p| load_pattern(p).with_context(|| format!("loading {}", p.display())))
        .collect()
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub estimator: String,
    pub weights: String,
    pub band_lo: f64,
    pub band_hi: f64,
    pub replicate: usize,
    pub value: Option<f64>,
    pub pair_count: u64,
    pub exclusions: usize,
    pub n_realizations: usize,
    pub target: Option<f64>,
    pub oracle_mu: Option<f64>,
    pub oracle_mu_tilde: Option<f64>,
    pub oracle_se: Option<f64>,
    pub se: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub weights_digest: String,
    pub seed: u64,
    pub runtime_ms: Option<f64>,
}

/// Oracle values for one band.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BandOracle {
    pub mu: Option<f64>,
    pub mu_tilde: Option<f64>,
    pub se: Option<f64>,
    /// Analytic per-class weight limits, when available.
    moments: Option<Vec<mppstat::oracle::ClassMoments>>,
}

impl BandOracle {
    fn target(&self, strategy: &WeightStrategy) -> Option<f64> {
        let ms = self.moments.as_ref()?;
        limit_target(ms, &weight_limits(strategy, ms)?)
    }
}

pub fn band_oracle(cfg: &ExperimentConfig, band: &Band, f: &MarkFunction, seed: u64) -> Result<BandOracle> {
    match class_moments(&cfg.spec, f, Order::Second, Some(band)) {
        Ok(ms) => match mu_from_moments(&ms) {
            Ok(mu) => Ok(BandOracle {
                mu: Some(mu),
                mu_tilde: Some(ms.iter().map(|m| m.p * m.mark_mean_f).sum()),
                se: Some(0.0),
                moments: Some(ms),
            }),
            Err(e) => {
                eprintln!("warning: oracle undefined on band [{}, {}] ({e}); oracle columns left empty", band.lo(), band.hi());
                Ok(BandOracle::default())
            }
        },
        Err(Error::Unsupported(why)) => match &cfg.brute_force {
            Some(bf) => {
                let pooled = brute_force_mu(&cfg.spec, f, Order::Second, Some(band), bf.n_mc, seed, BruteForceMode::Pooled, bf.extent)?;
                let avg =
                    brute_force_mu(&cfg.spec, f, Order::Second, Some(band), bf.n_mc, seed, BruteForceMode::RatioAverage, bf.extent)?;
                Ok(BandOracle {
                    mu: Some(pooled.value),
                    mu_tilde: Some(avg.value),
                    se: Some(pooled.standard_error.max(avg.standard_error)),
                    moments: None,
                })
            }
            None => {
                eprintln!("warning: no closed-form oracle ({why}); oracle columns left empty");
                Ok(BandOracle::default())
            }
        },
        Err(e) => Err(e.into()),
    }
}

/// Resolved estimator: name, weight label and strategy.
fn resolve(cfg: &ExperimentConfig, e: &EstimatorConfig, weights_override: Option<&str>) -> Result<(String, String, WeightStrategy)> {
    Ok(match e {
        EstimatorConfig::MuHatN => (e.name().into(), "equal".into(), WeightStrategy::Equal),
        EstimatorConfig::MuHatAlpha => (e.name().into(), "alpha".into(), WeightStrategy::AlphaPairs),
        EstimatorConfig::MuHatWeighted { weights } => {
            let flag = weights_override.unwrap_or(weights);
            (e.name().into(), flag.to_string(), cfg.strategy(flag)?)
        }
    })
}

/// Weighted combination of per-realization estimates with undefined
/// realizations dropped, plus a delete-one jackknife standard error.
fn combine(
    each: &[EstimateResult],
    weights: &[f64],
    estimator: &str,
) -> Result<(Option<f64>, usize, Option<f64>)> {
    let mut w: Vec<f64> = weights.to_vec();
    let mut excluded = 0;
    for (wi, e) in w.iter_mut().zip(each) {
        if e.value.is_none() {
            if *wi > 0.0 || estimator == "mu_hat_n" {
                excluded += 1;
            }
            *wi = 0.0;
        }
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Ok((None, excluded, None));
    }
    let value = weighted_average(each, &w)?.value;
    let xs: Vec<f64> = each.iter().map(|e| e.value.unwrap_or(0.0)).collect();
    let (sw, swx) = w.iter().zip(&xs).fold((0.0, 0.0), |(a, b), (wi, xi)| (a + wi, b + wi * xi));
    let used: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    let se = (used.len() >= 2).then(|| {
        stats::jackknife_se(used.len(), |k| {
            let i = used[k];
            (swx - w[i] * xs[i]) / (sw - w[i])
        })
    });
    Ok((value, excluded, se))
}

#[derive(Debug, Clone, Default)]
pub struct EstimateOptions {
    pub weights_override: Option<String>,
    pub timings: bool,
}

/// Rows for one set of realizations.
#[allow(clippy::too_many_arguments)]
fn estimate_patterns(
    cfg: &ExperimentConfig,
    patterns: &[PointPattern],
    win: &Window,
    bands: &[Band],
    oracles: &[BandOracle],
    f: &MarkFunction,
    replicate: usize,
    seed: u64,
    opts: &EstimateOptions,
) -> Result<Vec<ResultRow>> {
    let z = stats::normal_quantile(0.5 * (1.0 + cfg.level))?;
    let mut rows = Vec::new();
    for (band, oracle) in bands.iter().zip(oracles) {
        let each = mu_hat_each(patterns, win, band, f)?;
        for e in &cfg.estimators {
            let start = Instant::now();
            let (name, label, strategy) = resolve(cfg, e, opts.weights_override.as_deref())?;
            let weights = match strategy {
                WeightStrategy::AlphaPairs => patterns
                    .iter()
                    .map(|p| Ok(pair_count(p, win, band)? as f64))
                    .collect::<Result<Vec<_>>>()?,
                _ => compute_weights(&strategy, patterns, win, band)?,
            };
            let (value, exclusions, se) = combine(&each, &weights, &name)?;
            let target = match strategy {
                WeightStrategy::Equal => oracle.mu_tilde,
                WeightStrategy::AlphaPairs => oracle.target(&strategy).or(oracle.mu),
                _ => oracle.target(&strategy),
            };
            let (ci_lo, ci_hi) = match (value, se) {
                (Some(v), Some(s)) => (Some(v - z * s), Some(v + z * s)),
                _ => (None, None),
            };
            rows.push(ResultRow {
                estimator: name,
                weights: label,
                band_lo: band.lo(),
                band_hi: band.hi(),
                replicate,
                value,
                pair_count: each.iter().map(|e| e.pair_count.total()).sum(),
                exclusions,
                n_realizations: patterns.len(),
                target,
                oracle_mu: oracle.mu,
                oracle_mu_tilde: oracle.mu_tilde,
                oracle_se: oracle.se,
                se,
                ci_lo,
                ci_hi,
                weights_digest: weights_digest(&weights),
                seed,
                runtime_ms: opts.timings.then(|| start.elapsed().as_secs_f64() * 1e3),
            });
        }
    }
    Ok(rows)
}

/// Seed of replicate `r`. Replicate 0 uses `seed` itself, so it sees the
/// same realizations as `simulate` with that seed.
pub fn experiment_seed(seed: u64, r: u64) -> u64 {
    if r == 0 {
        seed
    } else {
        replicate_seed(seed, r)
    }
}

/// Simulates `n_replicates` experiments of `n_realizations` each; replicate
/// `r` uses seed [`experiment_seed`]`(seed, r)`.
pub fn estimate_simulated(cfg: &ExperimentConfig, seed: u64, opts: &EstimateOptions) -> Result<Vec<ResultRow>> {
    let win = cfg.window()?;
    let bands = cfg.bands()?;
    let f = cfg.mark_function()?;
    let bounds = cfg.sim_bounds()?;
    let oracles: Vec<BandOracle> = bands.iter().map(|b| band_oracle(cfg, b, &f, seed)).collect::<Result<_>>()?;
    let per_rep: Vec<Vec<ResultRow>> = (0..cfg.n_replicates)
        .into_par_iter()
        .map(|r| {
            let rep_seed = experiment_seed(seed, r as u64);
            let reals = sample_mixture(&cfg.spec, &bounds, cfg.n_realizations, rep_seed)?;
            let patterns: Vec<PointPattern> = reals.into_iter().map(|r| r.pattern).collect();
            estimate_patterns(cfg, &patterns, &win, &bands, &oracles, &f, r, rep_seed, opts)
        })
        .collect::<Result<_>>()?;
    Ok(per_rep.into_iter().flatten().collect())
}

/// Estimates from existing pattern files (a single replicate).
pub fn estimate_from_dir(cfg: &ExperimentConfig, dir: &Path, seed: u64, opts: &EstimateOptions) -> Result<Vec<ResultRow>> {
    let patterns = load_pattern_dir(dir)?;
    let win = cfg.window()?;
    let bands = cfg.bands()?;
    let f = cfg.mark_function()?;
    let oracles: Vec<BandOracle> = bands.iter().map(|b| band_oracle(cfg, b, &f, seed)).collect::<Result<_>>()?;
    estimate_patterns(cfg, &patterns, &win, &bands, &oracles, &f, 0, seed, opts)
}

pub fn write_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    pub realization: usize,
    pub centered_stat: Option<f64>,
    pub alpha_star: f64,
    pub alpha_cond: f64,
    pub center: f64,
    pub mu_hat: Option<f64>,
    pub lambda_u_hat: f64,
    pub s_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub min_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltSummary {
    pub n: usize,
    pub pooled_s_hat: Option<f64>,
    pub lambda_u_hat: Option<f64>,
    pub center: Option<f64>,
    pub mean_stat: Option<f64>,
    pub sd_stat: Option<f64>,
}

/// Per-realization CLT statistics for the first band, plus the pooled
/// `s` estimate when at least 30 realizations are available.
pub fn infer_clt(cfg: &ExperimentConfig, patterns: &[PointPattern]) -> Result<(Vec<CltRow>, CltSummary)> {
    let Some(clt) = &cfg.clt else {
        bail!("config has no \"clt\" section");
    };
    let win = cfg.window()?;
    let band = cfg.bands()?[0];
    let base = Registry::default().get(&clt.base_f)?;
    let cc = CltConfig::new(band, base.clone(), clt.u, win.clone())?;
    let rows: Vec<CltRow> = patterns
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let r = clt_statistic(p, &cc, clt.centering, clt.level)?;
            Ok(CltRow {
                realization: i,
                centered_stat: r.centered_stat,
                alpha_star: r.alpha_star,
                alpha_cond: r.alpha_cond,
                center: r.center,
                mu_hat: r.mu_hat,
                lambda_u_hat: r.lambda_u_hat,
                s_hat: r.s_hat,
                ci_lo: r.ci_lo,
                ci_hi: r.ci_hi,
                min_distance: r.diagnostics.min_distance,
            })
        })
        .collect::<Result<_>>()?;
    let pooled = (patterns.len() >= 30)
        .then(|| estimate_s(patterns, &win, &band, &base, clt.u))
        .transpose()?;
    let stat: Vec<f64> = rows.iter().filter_map(|r| r.centered_stat).collect();
    let summary = CltSummary {
        n: rows.len(),
        pooled_s_hat: pooled.map(|s| s.s_hat),
        lambda_u_hat: pooled.map(|s| s.lambda_u_hat),
        center: pooled.map(|s| s.center),
        mean_stat: (!stat.is_empty()).then(|| stats::mean(&stat)),
        sd_stat: (stat.len() >= 2).then(|| stats::std_dev(&stat)),
    };
    Ok((rows, summary))
}

/// Simulated realizations of the config (replicate 0).
pub fn simulate_patterns(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<PointPattern>> {
    let bounds = cfg.sim_bounds()?;
    Ok(sample_mixture(&cfg.spec, &bounds, cfg.n_realizations, seed)?
        .into_iter()
        .map(|r| r.pattern)
        .collect())
}
