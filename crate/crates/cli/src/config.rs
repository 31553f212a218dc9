//! Run configuration: resolved settings echoed into every output for
//! provenance, loadable back from a JSON config file.

use std::path::PathBuf;

use ocd_core::{FitOptions, LevelsMode, LinkFunction, ScoreOptions, SearchOptions};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dot: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edgelist: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_json: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_tsv: Option<PathBuf>,

    /// "auto" or comma-separated per-column level counts.
    pub levels: String,
    /// Quantile discretization level count(s); a list sweeps several.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discretize: Option<String>,
    pub trichotomize_zero: bool,

    pub link: LinkFunction,
    /// "greedy" or "exhaustive".
    pub search: String,
    /// "empty" or a path to an edge-list file.
    pub init: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_parents: Option<usize>,
    pub first_improvement: bool,

    pub max_iter: usize,
    pub tol_grad: f64,
    pub tol_nll: f64,
    pub param_bound: f64,

    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<usize>,
    pub confounder: bool,
}

impl RunConfig {
    pub fn base(subcommand: &str) -> Self {
        let fit = FitOptions::default();
        RunConfig {
            subcommand: subcommand.to_string(),
            levels: "auto".into(),
            link: LinkFunction::Probit,
            search: "greedy".into(),
            init: "empty".into(),
            max_iter: fit.max_iter,
            tol_grad: fit.tol_grad,
            tol_nll: fit.tol_nll,
            param_bound: fit.param_bound,
            ..Default::default()
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            max_iter: self.max_iter,
            tol_grad: self.tol_grad,
            tol_nll: self.tol_nll,
            param_bound: self.param_bound,
        }
    }

    pub fn score_options(&self) -> ScoreOptions {
        ScoreOptions {
            link: self.link,
            fit: self.fit_options(),
        }
    }

    pub fn search_options(&self) -> SearchOptions {
        SearchOptions {
            score: self.score_options(),
            max_parents: self.max_parents,
            first_improvement: self.first_improvement,
        }
    }

    pub fn levels_mode(&self) -> Result<LevelsMode, String> {
        if self.levels == "auto" {
            return Ok(LevelsMode::Auto);
        }
        let levels: Result<Vec<usize>, _> = self
            .levels
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect();
        match levels {
            Ok(v) if !v.is_empty() => Ok(LevelsMode::Declared(v)),
            _ => Err(format!(
                "--levels expects `auto` or a comma list, got {:?}",
                self.levels
            )),
        }
    }
}

/// Parse a sigma grid: either a comma list (`0.25,0.75,1.5`) or an inclusive
/// range `lo..hi` stepped by 0.25.
pub fn parse_sigmas(text: &str) -> Result<Vec<f64>, String> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: f64 = lo
            .trim()
            .parse()
            .map_err(|_| format!("bad range start {lo:?}"))?;
        let hi: f64 = hi
            .trim()
            .parse()
            .map_err(|_| format!("bad range end {hi:?}"))?;
        if !(lo > 0.0 && hi >= lo) {
            return Err(format!("invalid sigma range {text:?}"));
        }
        let mut out = Vec::new();
        let mut s = lo;
        while s <= hi + 1e-9 {
            out.push(s);
            s += 0.25;
        }
        return Ok(out);
    }
    let list: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match list {
        Ok(v) if !v.is_empty() && v.iter().all(|&s| s > 0.0) => Ok(v),
        _ => Err(format!(
            "--sigmas expects a comma list or lo..hi, got {text:?}"
        )),
    }
}

/// Parse discretization level count(s): "12", "10,11,12", or "10..20".
pub fn parse_level_list(text: &str) -> Result<Vec<usize>, String> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo
            .trim()
            .parse()
            .map_err(|_| format!("bad range start {lo:?}"))?;
        let hi: usize = hi
            .trim()
            .parse()
            .map_err(|_| format!("bad range end {hi:?}"))?;
        if lo < 2 || hi < lo {
            return Err(format!("invalid level range {text:?}"));
        }
        return Ok((lo..=hi).collect());
    }
    let list: Result<Vec<usize>, _> = text.split(',').map(|s| s.trim().parse::<usize>()).collect();
    match list {
        Ok(v) if !v.is_empty() && v.iter().all(|&l| l >= 2) => Ok(v),
        _ => Err(format!("expected level count(s) >= 2, got {text:?}")),
    }
}
