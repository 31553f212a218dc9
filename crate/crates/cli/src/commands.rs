//! Subcommand implementations. Each returns the JSON value printed to stdout
//! (and optionally written to a file).

use std::fs;
use std::path::{Path, PathBuf};

use ocd_core::{
    accuracy, auc_ranked,
    dataset::read_csv_reals,
    exhaustive_search, forced_decision,
    graph::{format_edge_list, parse_edge_list, to_dot},
    greedy_search, quantile_discretize, shd, trichotomize_zero_median, Dag, Direction,
    DiscoveryResult, Error, LevelsMode, OrdinalDataset, PairDecision, Result, ScoreCache,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_level_list, RunConfig};
use crate::output::{named_edges, named_local_score, named_move};

fn invalid(msg: String) -> Error {
    Error::Validation(msg)
}

/// Load a dataset per the config: integer codes by default, or reals routed
/// through quantile discretization / zero-median trichotomization.
pub fn load_dataset(config: &RunConfig) -> Result<OrdinalDataset> {
    let path = config
        .csv
        .as_ref()
        .ok_or_else(|| invalid("--csv is required".into()))?;
    if config.trichotomize_zero && config.discretize.is_some() {
        return Err(invalid(
            "--discretize and --trichotomize-zero are exclusive".into(),
        ));
    }
    if config.trichotomize_zero {
        let file = fs::File::open(path)?;
        let (names, columns) = read_csv_reals(file)?;
        let coded = columns
            .iter()
            .zip(&names)
            .map(|(col, name)| {
                trichotomize_zero_median(col).map_err(|e| name_column_error(e, name))
            })
            .collect::<Result<Vec<_>>>()?;
        return OrdinalDataset::from_parts(names.clone(), vec![3; names.len()], coded);
    }
    if let Some(spec) = &config.discretize {
        let levels = parse_level_list(spec).map_err(invalid)?;
        if levels.len() != 1 {
            return Err(invalid(
                "a single --discretize level count is expected here".into(),
            ));
        }
        let file = fs::File::open(path)?;
        let (names, columns) = read_csv_reals(file)?;
        return discretize_all(&names, &columns, levels[0]);
    }
    OrdinalDataset::from_csv(path, config.levels_mode().map_err(invalid)?)
}

fn name_column_error(e: Error, name: &str) -> Error {
    match e {
        Error::DegenerateColumn { msg, .. } => Error::DegenerateColumn {
            name: name.to_string(),
            msg,
        },
        other => other,
    }
}

fn discretize_all(names: &[String], columns: &[Vec<f64>], levels: usize) -> Result<OrdinalDataset> {
    let coded = columns
        .iter()
        .zip(names)
        .map(|(col, name)| quantile_discretize(col, levels).map_err(|e| name_column_error(e, name)))
        .collect::<Result<Vec<_>>>()?;
    OrdinalDataset::from_parts(names.to_vec(), vec![levels; names.len()], coded)
}

fn initial_graph(config: &RunConfig, data: &OrdinalDataset) -> Result<Dag> {
    if config.init == "empty" {
        Dag::empty(data.p())
    } else {
        let text = fs::read_to_string(&config.init)?;
        parse_edge_list(&text, data.names())
    }
}

fn write_json<T: Serialize>(path: Option<&PathBuf>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json serialization");
    match path {
        Some(p) => fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct FitResult {
    edges: Vec<crate::output::NamedEdge>,
    bic: f64,
    local_scores: Vec<crate::output::NamedLocalScore>,
    iterations: usize,
    moves_taken: Vec<crate::output::NamedMove>,
    score_evaluations: usize,
}

fn fit_result(r: &DiscoveryResult, names: &[String]) -> FitResult {
    FitResult {
        edges: named_edges(&r.graph, names),
        bic: r.bic,
        local_scores: r
            .local_scores
            .iter()
            .map(|s| named_local_score(s, names))
            .collect(),
        iterations: r.iterations,
        moves_taken: r.moves_taken.iter().map(|m| named_move(m, names)).collect(),
        score_evaluations: r.score_evaluations,
    }
}

pub fn run_fit(config: RunConfig) -> Result<()> {
    let data = load_dataset(&config)?;
    let init = initial_graph(&config, &data)?;
    let opts = config.search_options();
    let result = match config.search.as_str() {
        "greedy" => greedy_search(&data, &init, &opts)?,
        "exhaustive" => exhaustive_search(&data, &opts)?,
        other => return Err(invalid(format!("unknown search {other:?}"))),
    };
    if let Some(dot_path) = &config.dot {
        fs::write(dot_path, to_dot(&result.graph, data.names()))?;
    }
    if let Some(edge_path) = &config.edgelist {
        fs::write(edge_path, format_edge_list(&result.graph, data.names()))?;
    }
    let payload = fit_result(&result, data.names());
    let out = config.out.clone();
    write_json(out.as_ref(), &crate::output::envelope(config, payload))
}

pub fn run_score(config: RunConfig) -> Result<()> {
    let data = load_dataset(&config)?;
    let graph_path = config
        .graph
        .as_ref()
        .ok_or_else(|| invalid("--graph is required".into()))?;
    let text = fs::read_to_string(graph_path)?;
    let graph = parse_edge_list(&text, data.names())?;
    let cache = ScoreCache::new();
    let (bic, locals) = ocd_core::global_bic(&graph, &data, &config.score_options(), &cache)?;
    let payload = json!({
        "edges": named_edges(&graph, data.names()),
        "global_bic": bic,
        "local_scores": locals
            .iter()
            .map(|s| serde_json::to_value(named_local_score(s, data.names())).unwrap())
            .collect::<Vec<_>>(),
    });
    let out = config.out.clone();
    write_json(out.as_ref(), &crate::output::envelope(config, payload))
}

pub fn run_simulate(config: RunConfig) -> Result<()> {
    use rand::SeedableRng;
    let mut graph_rng = rand_chacha::ChaCha12Rng::seed_from_u64(config.seed);
    let mut param_rng = rand_chacha::ChaCha12Rng::seed_from_u64(config.seed);
    let mut data_rng = rand_chacha::ChaCha12Rng::seed_from_u64(config.seed);
    graph_rng.set_stream(1);
    param_rng.set_stream(2);
    data_rng.set_stream(3);

    let n = config.n.ok_or_else(|| invalid("--n is required".into()))?;
    let out_path = config
        .out
        .as_ref()
        .ok_or_else(|| invalid("--out is required".into()))?;

    let (data, truth_graph, names) = if config.confounder {
        let sigma = config.sigma.unwrap_or(1.0);
        let (data, _) = ocd_core::confounder_scenario(sigma, n, &mut data_rng)?;
        let truth = Dag::new(2, &[(1, 2)])?;
        let names = data.names().to_vec();
        (data, truth, names)
    } else {
        let p = config.p.ok_or_else(|| invalid("--p is required".into()))?;
        let edges = config
            .edges
            .ok_or_else(|| invalid("--edges is required".into()))?;
        let sigma = config.sigma.unwrap_or(1.0);
        let levels: Vec<usize> = match config.levels_mode().map_err(invalid)? {
            LevelsMode::Auto => vec![5; p],
            LevelsMode::Declared(v) if v.len() == 1 => vec![v[0]; p],
            LevelsMode::Declared(v) if v.len() == p => v,
            LevelsMode::Declared(v) => {
                return Err(invalid(format!("{} level counts for {p} nodes", v.len())))
            }
        };
        let graph = ocd_core::random_dag(p, edges, &mut graph_rng)?;
        let model = ocd_core::draw_parameters(&graph, sigma, &levels, config.link, &mut param_rng)?;
        let data = model.sample(n, &mut data_rng)?;
        let names = data.names().to_vec();
        (data, graph, names)
    };

    let file = fs::File::create(out_path)?;
    data.to_csv(file)?;
    if let Some(truth_path) = &config.truth {
        fs::write(truth_path, format_edge_list(&truth_graph, &names))?;
    }
    let payload = json!({
        "rows": data.n(),
        "columns": data.p(),
        "levels": data.levels(),
        "true_edges": named_edges(&truth_graph, &names),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&crate::output::envelope(config, payload)).unwrap()
    );
    Ok(())
}

pub fn run_discretize(config: RunConfig) -> Result<()> {
    let path = config
        .csv
        .as_ref()
        .ok_or_else(|| invalid("--csv is required".into()))?;
    let out_path = config
        .out
        .as_ref()
        .ok_or_else(|| invalid("--out is required".into()))?;
    let file = fs::File::open(path)?;
    let (names, columns) = read_csv_reals(file)?;
    let data = if config.trichotomize_zero {
        let coded = columns
            .iter()
            .zip(&names)
            .map(|(col, name)| {
                trichotomize_zero_median(col).map_err(|e| name_column_error(e, name))
            })
            .collect::<Result<Vec<_>>>()?;
        OrdinalDataset::from_parts(names.clone(), vec![3; names.len()], coded)?
    } else {
        let spec = config
            .discretize
            .as_ref()
            .ok_or_else(|| invalid("--levels L or --trichotomize-zero is required".into()))?;
        let levels = parse_level_list(spec).map_err(invalid)?;
        if levels.len() != 1 {
            return Err(invalid("one level count is expected".into()));
        }
        discretize_all(&names, &columns, levels[0])?
    };
    let file = fs::File::create(out_path)?;
    data.to_csv(file)?;
    let payload = json!({ "rows": data.n(), "columns": data.p(), "levels": data.levels() });
    println!(
        "{}",
        serde_json::to_string_pretty(&crate::output::envelope(config, payload)).unwrap()
    );
    Ok(())
}

pub fn run_eval(config: RunConfig) -> Result<()> {
    let est_path = config
        .estimated
        .as_ref()
        .ok_or_else(|| invalid("--estimated is required".into()))?;
    let truth_path = config
        .truth
        .as_ref()
        .ok_or_else(|| invalid("--truth is required".into()))?;
    let est_text = fs::read_to_string(est_path)?;
    let truth_text = fs::read_to_string(truth_path)?;
    // graphs are compared over the union of names; isolated extras cannot
    // change the distance
    let mut names: Vec<String> = Vec::new();
    for text in [&est_text, &truth_text] {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((a, b)) = line.split_once("->") {
                for name in [a.trim(), b.trim()] {
                    if !names.iter().any(|n| n == name) {
                        names.push(name.to_string());
                    }
                }
            }
        }
    }
    names.sort();
    let est = parse_edge_list(&est_text, &names)?;
    let truth = parse_edge_list(&truth_text, &names)?;
    let distance = shd(&est, &truth)?;
    let payload = json!({
        "shd": distance,
        "nodes": names.len(),
        "estimated_edges": est.num_edges(),
        "true_edges": truth.num_edges(),
    });
    let out = config.out.clone();
    write_json(out.as_ref(), &crate::output::envelope(config, payload))
}

#[derive(Serialize)]
struct PairRow {
    pair: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    levels: Option<usize>,
    direction: Direction,
    confidence: f64,
    tie: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<Direction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    correct: Option<bool>,
}

fn parse_truth_labels(path: &Path) -> Result<Vec<(String, Direction)>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || idx == 0 && line.to_lowercase().starts_with("pair") {
            continue;
        }
        let (name, dir) = line.split_once(',').ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: "expected `pair,direction`".into(),
        })?;
        let dir = match dir.trim() {
            "forward" => Direction::Forward,
            "backward" => Direction::Backward,
            other => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("unknown direction {other:?}"),
                })
            }
        };
        out.push((name.trim().to_string(), dir));
    }
    Ok(out)
}

/// Decide the causal direction of every two-column CSV in a file or
/// directory, optionally sweeping quantile discretization levels, and report
/// accuracy and ranked AUC against truth labels.
pub fn run_pair(config: RunConfig) -> Result<()> {
    let input = config
        .csv
        .as_ref()
        .ok_or_else(|| invalid("--csv is required".into()))?;
    let mut files: Vec<PathBuf> = if input.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(input)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        v.sort();
        v
    } else {
        vec![input.clone()]
    };
    if files.is_empty() {
        return Err(invalid(format!("no .csv files under {}", input.display())));
    }
    files.sort();

    let truth_labels = match &config.truth {
        Some(path) => Some(parse_truth_labels(path)?),
        None => None,
    };
    let level_sweep: Option<Vec<usize>> = match &config.discretize {
        Some(spec) => Some(parse_level_list(spec).map_err(invalid)?),
        None => None,
    };

    let score_opts = config.score_options();
    let mut rows: Vec<PairRow> = Vec::new();
    for file in &files {
        let stem = file
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        let truth = truth_labels.as_ref().and_then(|labels| {
            labels
                .iter()
                .find(|(name, _)| *name == stem)
                .map(|(_, d)| *d)
        });
        let datasets: Vec<(Option<usize>, OrdinalDataset)> = match &level_sweep {
            Some(levels) => {
                let handle = fs::File::open(file)?;
                let (names, columns) = read_csv_reals(handle)?;
                if names.len() != 2 {
                    return Err(invalid(format!("{stem}: expected 2 columns",)));
                }
                levels
                    .iter()
                    .map(|&l| Ok((Some(l), discretize_all(&names, &columns, l)?)))
                    .collect::<Result<Vec<_>>>()?
            }
            None => {
                let data = OrdinalDataset::from_csv(file, LevelsMode::Auto)?;
                if data.p() != 2 {
                    return Err(invalid(format!(
                        "{stem}: expected 2 columns, got {}",
                        data.p()
                    )));
                }
                vec![(None, data)]
            }
        };
        for (levels, data) in datasets {
            let d = forced_decision(&data, &score_opts)?;
            rows.push(PairRow {
                pair: stem.clone(),
                levels,
                direction: d.direction,
                confidence: d.confidence,
                tie: d.tie,
                truth,
                correct: truth.map(|t| t == d.direction),
            });
        }
    }

    let summary = summarize_pairs(&rows);
    if let Some(tsv_path) = &config.out_tsv {
        fs::write(tsv_path, pairs_tsv(&rows))?;
    }
    let payload = json!({ "decisions": rows, "summary": summary });
    let out = config.out_json.clone();
    write_json(out.as_ref(), &crate::output::envelope(config, payload))
}

fn summarize_pairs(rows: &[PairRow]) -> serde_json::Value {
    let mut by_level: std::collections::BTreeMap<Option<usize>, Vec<&PairRow>> =
        std::collections::BTreeMap::new();
    for row in rows {
        by_level.entry(row.levels).or_default().push(row);
    }
    let mut cells = Vec::new();
    for (levels, group) in &by_level {
        let labeled: Vec<&&PairRow> = group.iter().filter(|r| r.truth.is_some()).collect();
        let (acc, auc) = if labeled.is_empty() {
            (None, None)
        } else {
            let decisions: Vec<PairDecision> = labeled
                .iter()
                .map(|r| PairDecision {
                    direction: r.direction,
                    confidence: r.confidence,
                    tie: r.tie,
                })
                .collect();
            let truths: Vec<Direction> = labeled.iter().map(|r| r.truth.unwrap()).collect();
            let acc = accuracy(&decisions, &truths).ok();
            let auc = auc_ranked(&decisions, &truths).ok();
            (acc, auc)
        };
        cells.push(json!({
            "levels": levels,
            "pairs": group.len(),
            "accuracy": acc,
            "auc": auc,
        }));
    }
    json!(cells)
}

fn pairs_tsv(rows: &[PairRow]) -> String {
    let mut out = String::from("pair\tlevels\tdirection\tconfidence\ttie\ttruth\tcorrect\n");
    for r in rows {
        let dir = |d: Direction| match d {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.pair,
            r.levels.map_or(String::from("-"), |l| l.to_string()),
            dir(r.direction),
            r.confidence,
            r.tie,
            r.truth.map_or("-", dir),
            r.correct.map_or(String::from("-"), |c| c.to_string()),
        ));
    }
    out
}
