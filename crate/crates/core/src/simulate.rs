//! Synthetic ordinal Bayesian-network data: random DAGs, parameter draws
//! with balanced category sizes, ancestral sampling, and the hidden-
//! confounder pair scenario.
//!
//! Generators are deterministic functions of their RNG; pass independent
//! `ChaCha12Rng` streams (e.g. via `set_stream`) to decouple graph,
//! parameter, and data draws.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::OrdinalDataset;
use crate::error::{Error, Result};
use crate::graph::{Dag, NodeId};
use crate::link::LinkFunction;
use crate::metrics::Direction;

/// Monte Carlo pre-sample size used to place balanced cutpoints.
pub const BALANCE_PRESAMPLE: usize = 10_000;

/// Ground-truth parameters of one node.
#[derive(Debug, Clone)]
pub struct NodeParams {
    pub alpha: f64,
    /// Per parent (aligned with the sorted parent set): effect of each level
    /// code, full length L_k. Generator draws set the last level to 0.
    pub betas: Vec<Vec<f64>>,
    /// All cutpoints gamma_1..gamma_{L-1}, strictly increasing. Unlike fitted
    /// models, the simulation truth does not pin gamma_1 to 0.
    pub cutpoints: Vec<f64>,
}

/// A fully specified ordinal Bayesian network used as simulation truth.
#[derive(Debug, Clone)]
pub struct GroundTruthModel {
    pub graph: Dag,
    pub levels: Vec<usize>,
    pub link: LinkFunction,
    /// Indexed by node - 1.
    pub nodes: Vec<NodeParams>,
}

impl GroundTruthModel {
    pub fn new(
        graph: Dag,
        levels: Vec<usize>,
        link: LinkFunction,
        nodes: Vec<NodeParams>,
    ) -> Result<Self> {
        let p = graph.num_nodes();
        if levels.len() != p || nodes.len() != p {
            return Err(Error::Validation(format!(
                "{p} nodes but {} level counts and {} parameter sets",
                levels.len(),
                nodes.len()
            )));
        }
        for j in 1..=p {
            let np = &nodes[j - 1];
            let levels_j = levels[j - 1];
            if levels_j < 2 {
                return Err(Error::Validation(format!(
                    "node {j} has fewer than 2 levels"
                )));
            }
            if np.cutpoints.len() != levels_j - 1 {
                return Err(Error::Validation(format!(
                    "node {j}: {} cutpoints for {levels_j} levels",
                    np.cutpoints.len()
                )));
            }
            if np.cutpoints.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Validation(format!(
                    "node {j}: cutpoints not increasing"
                )));
            }
            let parents: Vec<NodeId> = graph.parents(j)?.iter().copied().collect();
            if np.betas.len() != parents.len() {
                return Err(Error::Validation(format!(
                    "node {j}: {} beta vectors for {} parents",
                    np.betas.len(),
                    parents.len()
                )));
            }
            for (t, &k) in parents.iter().enumerate() {
                if np.betas[t].len() != levels[k - 1] {
                    return Err(Error::Validation(format!(
                        "node {j}: beta vector for parent {k} has length {}, expected {}",
                        np.betas[t].len(),
                        levels[k - 1]
                    )));
                }
            }
        }
        Ok(GroundTruthModel {
            graph,
            levels,
            link,
            nodes,
        })
    }

    fn linear_predictor(&self, j: NodeId, row: &[usize]) -> f64 {
        let np = &self.nodes[j - 1];
        let mut eta = np.alpha;
        for (t, &k) in self.graph.parents(j).unwrap().iter().enumerate() {
            eta += np.betas[t][row[k - 1] - 1];
        }
        eta
    }

    /// Category probabilities of node `j` given a full row of codes (only the
    /// parents' entries are read).
    pub fn category_probs(&self, j: NodeId, row: &[usize]) -> Vec<f64> {
        let eta = self.linear_predictor(j, row);
        let np = &self.nodes[j - 1];
        let mut probs = Vec::with_capacity(self.levels[j - 1]);
        let mut prev = 0.0;
        for &c in &np.cutpoints {
            let cum = self.link.cdf(c - eta);
            probs.push((cum - prev).max(0.0));
            prev = cum;
        }
        probs.push((1.0 - prev).max(0.0));
        probs
    }

    /// Exact joint probability table by enumerating all level combinations,
    /// flattened row-major over (X_1, ..., X_p). Guarded to small models.
    pub fn joint_table(&self) -> Result<Vec<f64>> {
        let cells: usize = self.levels.iter().product();
        if cells > 1_000_000 {
            return Err(Error::Validation(format!(
                "joint table would have {cells} cells"
            )));
        }
        let p = self.graph.num_nodes();
        let order = self.graph.topological_order();
        let mut table = vec![0.0; cells];
        let mut row = vec![1usize; p];
        for (idx, slot) in table.iter_mut().enumerate() {
            let mut rem = idx;
            for j in (1..=p).rev() {
                row[j - 1] = rem % self.levels[j - 1] + 1;
                rem /= self.levels[j - 1];
            }
            let mut prob = 1.0;
            for &j in &order {
                prob *= self.category_probs(j, &row)[row[j - 1] - 1];
            }
            *slot = prob;
        }
        Ok(table)
    }

    /// Ancestral sampling: n iid rows drawn node-by-node in topological order.
    #[allow(clippy::needless_range_loop)]
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<OrdinalDataset> {
        if n == 0 {
            return Err(Error::Validation("sample size must be positive".into()));
        }
        let p = self.graph.num_nodes();
        let order = self.graph.topological_order();
        let mut columns = vec![vec![0usize; n]; p];
        let mut row = vec![0usize; p];
        for i in 0..n {
            for &j in &order {
                let eta = self.linear_predictor(j, &row);
                let z = eta + self.link.sample_noise(rng);
                let code = bucket(z, &self.nodes[j - 1].cutpoints);
                row[j - 1] = code;
                columns[j - 1][i] = code;
            }
        }
        let names = (1..=p).map(|j| format!("X{j}")).collect();
        OrdinalDataset::from_parts(names, self.levels.clone(), columns)
    }
}

/// Category of a latent value: 1 + number of cutpoints strictly below it.
fn bucket(z: f64, cutpoints: &[f64]) -> usize {
    1 + cutpoints.iter().filter(|&&c| c < z).count()
}

/// Uniform random permutation as topological order, then `num_edges` distinct
/// ordered pairs consistent with that order; acyclic by construction.
pub fn random_dag<R: Rng + ?Sized>(p: usize, num_edges: usize, rng: &mut R) -> Result<Dag> {
    if p == 0 {
        return Err(Error::EmptyGraph);
    }
    let max = p * (p - 1) / 2;
    if num_edges > max {
        return Err(Error::TooManyEdges {
            given: num_edges,
            max,
        });
    }
    let mut order: Vec<NodeId> = (1..=p).collect();
    for i in (1..p).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut slots = Vec::with_capacity(max);
    for i in 0..p {
        for k in i + 1..p {
            slots.push((order[i], order[k]));
        }
    }
    let chosen = rand::seq::index::sample(rng, max, num_edges);
    let edges: Vec<(NodeId, NodeId)> = chosen.iter().map(|i| slots[i]).collect();
    Dag::new(p, &edges)
}

/// Cutpoints making each of the `levels` categories equally likely given a
/// pre-sample of linear predictor values: the l/levels quantiles of the
/// latent score (predictor plus link noise), or the closed form
/// `eta + F^{-1}(l/levels)` when the predictor is constant.
pub fn balanced_cutpoints<R: Rng + ?Sized>(
    link: LinkFunction,
    levels: usize,
    linear_predictors: &[f64],
    rng: &mut R,
) -> Vec<f64> {
    let noises: Vec<f64> = linear_predictors
        .iter()
        .map(|_| link.sample_noise(rng))
        .collect();
    balanced_cutpoints_impl(link, levels, linear_predictors, &noises)
}

fn balanced_cutpoints_impl(
    link: LinkFunction,
    levels: usize,
    etas: &[f64],
    noises: &[f64],
) -> Vec<f64> {
    let constant = etas.windows(2).all(|w| w[0] == w[1]);
    if constant {
        let eta = etas.first().copied().unwrap_or(0.0);
        return (1..levels)
            .map(|l| eta + link.quantile(l as f64 / levels as f64))
            .collect();
    }
    let m = etas.len();
    let mut latent: Vec<f64> = etas.iter().zip(noises).map(|(e, z)| e + z).collect();
    latent.sort_by(f64::total_cmp);
    let mut cuts: Vec<f64> = (1..levels)
        .map(|l| latent[(l * m).div_ceil(levels) - 1])
        .collect();
    for i in 1..cuts.len() {
        if cuts[i] <= cuts[i - 1] {
            cuts[i] = cuts[i - 1] + 1e-9;
        }
    }
    cuts
}

/// Attach balanced cutpoints to given alphas and betas, processing nodes in
/// topological order against a shared Monte Carlo pre-sample.
fn calibrate_cutpoints<R: Rng + ?Sized>(
    graph: Dag,
    levels: &[usize],
    link: LinkFunction,
    alphas: &[f64],
    betas: Vec<Vec<Vec<f64>>>,
    rng: &mut R,
) -> Result<GroundTruthModel> {
    let p = graph.num_nodes();
    let order = graph.topological_order();
    let mut nodes: Vec<Option<NodeParams>> = vec![None; p];
    let mut presample = vec![vec![0usize; p]; BALANCE_PRESAMPLE];
    for &j in &order {
        let parents: Vec<NodeId> = graph.parents(j)?.iter().copied().collect();
        let node_betas = &betas[j - 1];
        let etas: Vec<f64> = presample
            .iter()
            .map(|row| {
                let mut eta = alphas[j - 1];
                for (t, &k) in parents.iter().enumerate() {
                    eta += node_betas[t][row[k - 1] - 1];
                }
                eta
            })
            .collect();
        let noises: Vec<f64> = (0..BALANCE_PRESAMPLE)
            .map(|_| link.sample_noise(rng))
            .collect();
        let cutpoints = balanced_cutpoints_impl(link, levels[j - 1], &etas, &noises);
        for (i, row) in presample.iter_mut().enumerate() {
            row[j - 1] = bucket(etas[i] + noises[i], &cutpoints);
        }
        nodes[j - 1] = Some(NodeParams {
            alpha: alphas[j - 1],
            betas: node_betas.clone(),
            cutpoints,
        });
    }
    GroundTruthModel::new(
        graph,
        levels.to_vec(),
        link,
        nodes.into_iter().flatten().collect(),
    )
}

/// Draw effects and intercepts iid N(0, sigma^2) (free levels only; the last
/// level of every effect vector is 0) and place balanced cutpoints.
pub fn draw_parameters<R: Rng + ?Sized>(
    graph: &Dag,
    sigma: f64,
    levels: &[usize],
    link: LinkFunction,
    rng: &mut R,
) -> Result<GroundTruthModel> {
    if sigma <= 0.0 {
        return Err(Error::Validation(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if levels.len() != graph.num_nodes() {
        return Err(Error::Validation(
            "levels length must match node count".into(),
        ));
    }
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    let p = graph.num_nodes();
    let mut alphas = Vec::with_capacity(p);
    let mut betas: Vec<Vec<Vec<f64>>> = Vec::with_capacity(p);
    for j in 1..=p {
        alphas.push(normal.sample(rng));
        let parents: Vec<NodeId> = graph.parents(j)?.iter().copied().collect();
        betas.push(
            parents
                .iter()
                .map(|&k| {
                    let lk = levels[k - 1];
                    let mut b: Vec<f64> = (0..lk - 1).map(|_| normal.sample(rng)).collect();
                    b.push(0.0);
                    b
                })
                .collect(),
        );
    }
    calibrate_cutpoints(graph.clone(), levels, link, &alphas, betas, rng)
}

/// Trivariate truth X3 -> X1, X3 -> X2, X1 -> X2 with five levels each and
/// one shared effect vector across all three edges.
pub fn confounder_model<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> Result<GroundTruthModel> {
    if sigma <= 0.0 {
        return Err(Error::Validation(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let levels = vec![5usize; 3];
    let link = LinkFunction::Probit;
    let graph = Dag::new(3, &[(3, 1), (3, 2), (1, 2)])?;
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    let mut shared: Vec<f64> = (0..4).map(|_| normal.sample(rng)).collect();
    shared.push(0.0);
    let alphas: Vec<f64> = (0..3).map(|_| normal.sample(rng)).collect();
    // node 1: parent {3}; node 2: parents {1, 3}; node 3: root
    let betas = vec![
        vec![shared.clone()],
        vec![shared.clone(), shared.clone()],
        vec![],
    ];
    calibrate_cutpoints(graph, &levels, link, &alphas, betas, rng)
}

/// Hidden-confounder pair scenario: sample the trivariate confounder model,
/// hide X3, and return only (X1, X2) with the true direction label X1 -> X2.
pub fn confounder_scenario<R: Rng + ?Sized>(
    sigma: f64,
    n: usize,
    rng: &mut R,
) -> Result<(OrdinalDataset, Direction)> {
    let model = confounder_model(sigma, rng)?;
    let full = model.sample(n, rng)?;
    let observed = full.select_pair(1, 2)?;
    Ok((observed, Direction::Forward))
}
