//! Maximum-likelihood fitting of one node's cumulative-link ordinal
//! regression given its parent set. This is the likelihood engine behind
//! every graph score.
//!
//! Model for node j with parents pa(j), levels L_j, and link F:
//!
//! ```text
//! Pr(X_j <= l | parents) = F(gamma_l - eta),
//! eta = alpha + sum_k beta[k][X_k]
//! ```
//!
//! Identifiability constraints: `gamma_1 = 0` and `beta[k][L_k] = 0`. The
//! free parameter count is therefore `K = (L_j - 1) + sum_k (L_k - 1)`.
//!
//! Optimization runs over an unconstrained vector
//! `[alpha, beta blocks..., zeta_2..zeta_{L-1}]` with
//! `gamma_2 = exp(zeta_2)`, `gamma_l = gamma_{l-1} + exp(zeta_l)`, which
//! keeps the cutpoints strictly increasing at every iterate.

use serde::{Deserialize, Serialize};

use crate::dataset::OrdinalDataset;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::link::LinkFunction;
use crate::optim::{minimize, OptimOptions, OptimStatus};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol_grad: f64,
    pub tol_nll: f64,
    /// Any unconstrained coordinate crossing this magnitude is treated as
    /// separation (the likelihood is saturating toward a boundary).
    pub param_bound: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 200,
            tol_grad: 1e-8,
            tol_nll: 1e-10,
            param_bound: 30.0,
        }
    }
}

/// What to regress on what: target node, ordered parent list, level counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub node: NodeId,
    pub parents: Vec<NodeId>,
    pub target_levels: usize,
    pub parent_levels: Vec<usize>,
    pub link: LinkFunction,
}

impl NodeSpec {
    pub fn new(
        node: NodeId,
        parents: Vec<NodeId>,
        target_levels: usize,
        parent_levels: Vec<usize>,
        link: LinkFunction,
    ) -> Result<Self> {
        if node == 0 {
            return Err(Error::NodeOutOfRange { node, num_nodes: 0 });
        }
        if parents.contains(&node) {
            return Err(Error::Validation(format!(
                "node {node} cannot be its own parent"
            )));
        }
        let mut sorted = parents.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != parents.len() {
            return Err(Error::Validation("duplicate parent ids".into()));
        }
        if parent_levels.len() != parents.len() {
            return Err(Error::Validation(format!(
                "{} parents but {} parent level counts",
                parents.len(),
                parent_levels.len()
            )));
        }
        if target_levels < 2 || parent_levels.iter().any(|&l| l < 2) {
            return Err(Error::Validation(
                "every variable needs at least 2 levels".into(),
            ));
        }
        Ok(NodeSpec {
            node,
            parents,
            target_levels,
            parent_levels,
            link,
        })
    }

    pub fn from_dataset(
        data: &OrdinalDataset,
        node: NodeId,
        parents: &[NodeId],
        link: LinkFunction,
    ) -> Result<Self> {
        let p = data.p();
        for &j in std::iter::once(&node).chain(parents) {
            if j == 0 || j > p {
                return Err(Error::NodeOutOfRange {
                    node: j,
                    num_nodes: p,
                });
            }
        }
        NodeSpec::new(
            node,
            parents.to_vec(),
            data.level(node),
            parents.iter().map(|&k| data.level(k)).collect(),
            link,
        )
    }

    /// Free parameter count K = (L_j - 1) + sum_k (L_k - 1); this is also the
    /// length of the unconstrained optimization vector.
    pub fn num_params(&self) -> usize {
        (self.target_levels - 1) + self.parent_levels.iter().map(|l| l - 1).sum::<usize>()
    }

    fn zeta_offset(&self) -> usize {
        1 + self.parent_levels.iter().map(|l| l - 1).sum::<usize>()
    }

    /// Flat index of beta[parent t][level c] (c 0-based, c < L_t - 1).
    fn beta_index(&self, t: usize, c: usize) -> usize {
        1 + self.parent_levels[..t].iter().map(|l| l - 1).sum::<usize>() + c
    }

    /// Cutpoints gamma_1..gamma_{L-1} implied by the unconstrained vector
    /// (gamma_1 = 0, positive increments exp(zeta)). An increment that
    /// underflows below the previous cutpoint's resolution is floored at one
    /// representable step so the cutpoints stay strictly increasing and the
    /// likelihood stays finite.
    fn cutpoints_from(&self, params: &[f64]) -> Vec<f64> {
        let z = self.zeta_offset();
        let mut cuts = Vec::with_capacity(self.target_levels - 1);
        cuts.push(0.0);
        for i in 0..self.target_levels.saturating_sub(2) {
            let prev = *cuts.last().unwrap();
            let next = prev + params[z + i].exp();
            cuts.push(if next > prev { next } else { prev.next_up() });
        }
        cuts
    }
}

/// One node's fitted cumulative-link regression.
#[derive(Debug, Clone)]
pub struct FittedNodeModel {
    pub spec: NodeSpec,
    pub alpha: f64,
    /// Per parent: effects for levels 1..L_k-1; the last level's effect is 0.
    pub betas: Vec<Vec<f64>>,
    /// Free cutpoints gamma_2..gamma_{L-1}; gamma_1 = 0 is implied.
    pub cutpoints: Vec<f64>,
    pub loglik: f64,
    pub num_params: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Negative log-likelihood at the start and after each accepted step.
    pub nll_trace: Vec<f64>,
}

impl FittedNodeModel {
    fn from_params(
        spec: &NodeSpec,
        params: &[f64],
        loglik: f64,
        converged: bool,
        iterations: usize,
        nll_trace: Vec<f64>,
    ) -> Self {
        let betas: Vec<Vec<f64>> = (0..spec.parents.len())
            .map(|t| {
                (0..spec.parent_levels[t] - 1)
                    .map(|c| params[spec.beta_index(t, c)])
                    .collect()
            })
            .collect();
        let cutpoints = spec.cutpoints_from(params)[1..].to_vec();
        FittedNodeModel {
            spec: spec.clone(),
            alpha: params[0],
            betas,
            cutpoints,
            loglik,
            num_params: spec.num_params(),
            converged,
            iterations,
            nll_trace,
        }
    }

    /// All cutpoints gamma_1..gamma_{L-1}, including the fixed gamma_1 = 0.
    pub fn full_cutpoints(&self) -> Vec<f64> {
        let mut cuts = Vec::with_capacity(self.cutpoints.len() + 1);
        cuts.push(0.0);
        cuts.extend_from_slice(&self.cutpoints);
        cuts
    }

    /// Linear predictor for one parent configuration (1-based codes, aligned
    /// with `spec.parents`).
    pub fn linear_predictor(&self, parent_config: &[usize]) -> Result<f64> {
        if parent_config.len() != self.spec.parents.len() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.parents.len(),
                got: parent_config.len(),
            });
        }
        let mut eta = self.alpha;
        for (t, &code) in parent_config.iter().enumerate() {
            let levels = self.spec.parent_levels[t];
            if code == 0 || code > levels {
                return Err(Error::InvalidParentCode {
                    parent: self.spec.parents[t],
                    code,
                    levels,
                });
            }
            if code < levels {
                eta += self.betas[t][code - 1];
            }
        }
        Ok(eta)
    }

    /// Probability of each target category given a parent configuration.
    /// Sums to 1 exactly up to rounding (telescoping differences of the CDF).
    pub fn category_probs(&self, parent_config: &[usize]) -> Result<Vec<f64>> {
        let eta = self.linear_predictor(parent_config)?;
        let link = self.spec.link;
        let cuts = self.full_cutpoints();
        let mut probs = Vec::with_capacity(self.spec.target_levels);
        let mut prev = 0.0;
        for &c in &cuts {
            let cum = link.cdf(c - eta);
            probs.push((cum - prev).max(0.0));
            prev = cum;
        }
        probs.push((1.0 - prev).max(0.0));
        Ok(probs)
    }
}

/// Distinct (target, parent-config) cells with observation counts; NLL and
/// gradient loops run over cells rather than rows.
struct Cells {
    /// (0-based target category, flat beta indices touched, count)
    rows: Vec<(usize, Vec<usize>, f64)>,
}

fn aggregate(spec: &NodeSpec, data: &OrdinalDataset) -> Result<Cells> {
    let p = data.p();
    for &j in std::iter::once(&spec.node).chain(&spec.parents) {
        if j == 0 || j > p {
            return Err(Error::NodeOutOfRange {
                node: j,
                num_nodes: p,
            });
        }
    }
    let target = data.column(spec.node);
    let parent_cols: Vec<&[usize]> = spec.parents.iter().map(|&k| data.column(k)).collect();
    let mut counts: std::collections::BTreeMap<Vec<usize>, f64> = std::collections::BTreeMap::new();
    let mut key = Vec::with_capacity(1 + spec.parents.len());
    for i in 0..data.n() {
        key.clear();
        let y = target[i];
        if y == 0 || y > spec.target_levels {
            return Err(Error::Validation(format!(
                "target code {y} outside 1..={}",
                spec.target_levels
            )));
        }
        key.push(y);
        for (t, col) in parent_cols.iter().enumerate() {
            let code = col[i];
            if code == 0 || code > spec.parent_levels[t] {
                return Err(Error::InvalidParentCode {
                    parent: spec.parents[t],
                    code,
                    levels: spec.parent_levels[t],
                });
            }
            key.push(code);
        }
        *counts.entry(key.clone()).or_insert(0.0) += 1.0;
    }
    let rows = counts
        .into_iter()
        .map(|(key, count)| {
            let y0 = key[0] - 1;
            let beta_idx: Vec<usize> = key[1..]
                .iter()
                .enumerate()
                .filter(|(t, &code)| code < spec.parent_levels[*t])
                .map(|(t, &code)| spec.beta_index(t, code - 1))
                .collect();
            (y0, beta_idx, count)
        })
        .collect();
    Ok(Cells { rows })
}

/// log P(category y0 | eta). When both interval endpoints round to the same
/// float (category width below resolution at this predictor magnitude), fall
/// back to the first-order value pdf(a) * gap, whose log is
/// log_pdf(a) + zeta; this keeps the objective finite for any finite params.
fn log_cell_prob(
    spec: &NodeSpec,
    params: &[f64],
    cuts: &[f64],
    y0: usize,
    eta: f64,
) -> (f64, f64, f64) {
    let link = spec.link;
    let levels = spec.target_levels;
    let a = if y0 + 1 < levels {
        cuts[y0] - eta
    } else {
        f64::INFINITY
    };
    let b = if y0 > 0 {
        cuts[y0 - 1] - eta
    } else {
        f64::NEG_INFINITY
    };
    let logp = if a > b {
        link.log_interval_prob(a, b)
    } else {
        link.log_pdf(a) + params[spec.zeta_offset() + y0 - 1]
    };
    (logp, a, b)
}

fn nll_cells(spec: &NodeSpec, params: &[f64], cells: &Cells) -> f64 {
    let cuts = spec.cutpoints_from(params);
    let mut nll = 0.0;
    for (y0, beta_idx, count) in &cells.rows {
        let eta = params[0] + beta_idx.iter().map(|&i| params[i]).sum::<f64>();
        let (logp, _, _) = log_cell_prob(spec, params, &cuts, *y0, eta);
        nll -= count * logp;
    }
    nll
}

fn grad_cells(spec: &NodeSpec, params: &[f64], cells: &Cells) -> Vec<f64> {
    let link = spec.link;
    let levels = spec.target_levels;
    let cuts = spec.cutpoints_from(params);
    let zoff = spec.zeta_offset();
    let mut grad = vec![0.0; params.len()];
    // gradient w.r.t. the constrained cutpoints gamma_1..gamma_{L-1}
    let mut gcut = vec![0.0; levels - 1];
    for (y0, beta_idx, count) in &cells.rows {
        let eta = params[0] + beta_idx.iter().map(|&i| params[i]).sum::<f64>();
        let (logp, a, b) = log_cell_prob(spec, params, &cuts, *y0, eta);
        let ra = if a.is_finite() {
            (link.log_pdf(a) - logp).exp()
        } else {
            0.0
        };
        let rb = if b.is_finite() {
            (link.log_pdf(b) - logp).exp()
        } else {
            0.0
        };
        let d_eta = count * (ra - rb);
        grad[0] += d_eta;
        for &i in beta_idx {
            grad[i] += d_eta;
        }
        if y0 + 1 < levels {
            gcut[*y0] -= count * ra;
        }
        if *y0 > 0 {
            gcut[y0 - 1] += count * rb;
        }
    }
    // chain rule onto the zetas: gamma_m depends on zeta_t for t <= m,
    // with d gamma_m / d zeta_t = exp(zeta_t); gamma_1 is fixed.
    let mut suffix = 0.0;
    for z in (0..levels.saturating_sub(2)).rev() {
        suffix += gcut[z + 1];
        grad[zoff + z] = suffix * params[zoff + z].exp();
    }
    grad
}

fn check_dim(spec: &NodeSpec, params: &[f64]) -> Result<()> {
    if params.len() != spec.num_params() {
        return Err(Error::DimensionMismatch {
            expected: spec.num_params(),
            got: params.len(),
        });
    }
    Ok(())
}

/// Negative log-likelihood at an unconstrained parameter vector. Finite for
/// all finite parameters.
pub fn negative_log_likelihood(
    spec: &NodeSpec,
    params: &[f64],
    data: &OrdinalDataset,
) -> Result<f64> {
    check_dim(spec, params)?;
    let cells = aggregate(spec, data)?;
    Ok(nll_cells(spec, params, &cells))
}

/// Analytic gradient of `negative_log_likelihood` w.r.t. the unconstrained
/// parameters.
pub fn nll_gradient(spec: &NodeSpec, params: &[f64], data: &OrdinalDataset) -> Result<Vec<f64>> {
    check_dim(spec, params)?;
    let cells = aggregate(spec, data)?;
    Ok(grad_cells(spec, params, &cells))
}

/// Saturated start: alpha and betas at zero, cutpoints matching the link
/// inversion of the target's empirical cumulative proportions. Intercept-only
/// specs therefore start at (and immediately converge to) their MLE.
fn initial_params(spec: &NodeSpec, data: &OrdinalDataset) -> Vec<f64> {
    let levels = spec.target_levels;
    let n = data.n() as f64;
    let mut counts = vec![0.0f64; levels];
    for &code in data.column(spec.node) {
        counts[code - 1] += 1.0;
    }
    let eps = 0.5 / n;
    let mut qs = Vec::with_capacity(levels - 1);
    let mut cum = 0.0;
    for count in counts.iter().take(levels - 1) {
        cum += count / n;
        qs.push(spec.link.quantile(cum.clamp(eps, 1.0 - eps)));
    }
    let mut params = vec![0.0; spec.num_params()];
    params[0] = -qs[0];
    let zoff = spec.zeta_offset();
    for z in 0..levels - 2 {
        params[zoff + z] = (qs[z + 1] - qs[z]).max(1e-3).ln();
    }
    params
}

/// Fit the node's regression by maximum likelihood.
///
/// Returns `Error::Separation` carrying the bound-clamped fit when any
/// coordinate runs past `opts.param_bound`, and `Error::DegenerateTarget`
/// when the target column shows fewer than two levels.
pub fn fit(spec: &NodeSpec, data: &OrdinalDataset, opts: &FitOptions) -> Result<FittedNodeModel> {
    let cells = aggregate(spec, data)?;
    let mut seen = vec![false; spec.target_levels];
    for (y0, _, _) in &cells.rows {
        seen[*y0] = true;
    }
    if seen.iter().filter(|&&b| b).count() < 2 {
        return Err(Error::DegenerateTarget { node: spec.node });
    }

    let x0 = initial_params(spec, data);
    let optim_opts = OptimOptions {
        max_iter: opts.max_iter,
        tol_grad: opts.tol_grad,
        tol_nll: opts.tol_nll,
        param_bound: opts.param_bound,
    };
    let result = minimize(
        |x| nll_cells(spec, x, &cells),
        |x| grad_cells(spec, x, &cells),
        x0,
        &optim_opts,
    );

    match result.status {
        OptimStatus::BoundExceeded => {
            let clamped: Vec<f64> = result
                .x
                .iter()
                .map(|v| v.clamp(-opts.param_bound, opts.param_bound))
                .collect();
            let nll = nll_cells(spec, &clamped, &cells);
            let mut trace = result.trace;
            trace.push(nll);
            let model =
                FittedNodeModel::from_params(spec, &clamped, -nll, false, result.iterations, trace);
            Err(Error::Separation(Box::new(model)))
        }
        // An NLL at (numerically) zero means every observed cell is
        // predicted with probability ~1, i.e. the target is a deterministic
        // function of its parents and the true maximizer is at infinity.
        // Any cell with two distinct outcomes keeps the minimized NLL above
        // ln 2, so this cannot misfire on non-separated data.
        _ if result.value < 1e-6 => {
            let model = FittedNodeModel::from_params(
                spec,
                &result.x,
                -result.value,
                false,
                result.iterations,
                result.trace,
            );
            Err(Error::Separation(Box::new(model)))
        }
        status => Ok(FittedNodeModel::from_params(
            spec,
            &result.x,
            -result.value,
            status == OptimStatus::Converged,
            result.iterations,
            result.trace,
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::OrdinalDataset;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn two_col(levels: (usize, usize), rows: &[(usize, usize)]) -> OrdinalDataset {
        OrdinalDataset::from_parts(
            vec!["x".into(), "y".into()],
            vec![levels.0, levels.1],
            vec![
                rows.iter().map(|r| r.0).collect(),
                rows.iter().map(|r| r.1).collect(),
            ],
        )
        .unwrap()
    }

    fn one_col(levels: usize, codes: &[usize]) -> OrdinalDataset {
        OrdinalDataset::from_parts(vec!["y".into()], vec![levels], vec![codes.to_vec()]).unwrap()
    }

    /// Conditional model matching the worked bivariate example: 3-level cause
    /// with effects (1,-1,1) (encoded as alpha=1, free betas (0,-2)), 3-level
    /// target with cutpoints (0,1).
    fn example_conditional() -> FittedNodeModel {
        let spec = NodeSpec::new(2, vec![1], 3, vec![3], LinkFunction::Probit).unwrap();
        FittedNodeModel {
            spec,
            alpha: 1.0,
            betas: vec![vec![0.0, -2.0]],
            cutpoints: vec![1.0],
            loglik: f64::NAN,
            num_params: 4,
            converged: true,
            iterations: 0,
            nll_trace: vec![],
        }
    }

    #[test]
    fn category_probs_reference_values() {
        let m = example_conditional();
        let p1 = m.category_probs(&[1]).unwrap();
        assert_relative_eq!(p1[0], 0.158_655_253_931_457, max_relative = 1e-12);
        assert_relative_eq!(p1[1], 0.341_344_746_068_543, max_relative = 1e-12);
        assert_relative_eq!(p1[2], 0.5, max_relative = 1e-12);
        let p2 = m.category_probs(&[2]).unwrap();
        assert_relative_eq!(p2[0], 0.841_344_746_068_543, max_relative = 1e-12);
        assert_relative_eq!(p2[1], 0.135_905_121_983_278, max_relative = 1e-9);
        assert_relative_eq!(p2[2], 0.022_750_131_948_179, max_relative = 1e-9);
        assert!(matches!(
            m.category_probs(&[4]),
            Err(Error::InvalidParentCode { .. })
        ));
        assert!((p1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn intercept_only_probs_are_half_half() {
        let spec = NodeSpec::new(1, vec![], 2, vec![], LinkFunction::Probit).unwrap();
        let m = FittedNodeModel {
            spec,
            alpha: 0.0,
            betas: vec![],
            cutpoints: vec![],
            loglik: f64::NAN,
            num_params: 1,
            converged: true,
            iterations: 0,
            nll_trace: vec![],
        };
        assert_eq!(m.category_probs(&[]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn nll_reference_values() {
        let spec = NodeSpec::new(1, vec![], 2, vec![], LinkFunction::Probit).unwrap();
        let d1 = one_col(2, &[1]);
        let nll = negative_log_likelihood(&spec, &[0.0], &d1).unwrap();
        assert_relative_eq!(nll, std::f64::consts::LN_2, max_relative = 1e-12);
        let d2 = one_col(2, &[1, 2]);
        let nll2 = negative_log_likelihood(&spec, &[0.0], &d2).unwrap();
        assert_relative_eq!(nll2, 2.0 * std::f64::consts::LN_2, max_relative = 1e-12);
        assert!(matches!(
            negative_log_likelihood(&spec, &[0.0, 1.0], &d1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn nll_matches_rowwise_product_oracle() {
        // cells aggregation must agree with a direct per-row sum of log probs
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let rows: Vec<(usize, usize)> = (0..200)
            .map(|_| (rng.random_range(1..=3), rng.random_range(1..=4)))
            .collect();
        let data = two_col((3, 4), &rows);
        let spec = NodeSpec::from_dataset(&data, 2, &[1], LinkFunction::Probit).unwrap();
        let params: Vec<f64> = (0..spec.num_params())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let nll = negative_log_likelihood(&spec, &params, &data).unwrap();

        let model = FittedNodeModel::from_params(&spec, &params, f64::NAN, true, 0, vec![]);
        let mut direct = 0.0;
        for &(x, y) in &rows {
            let probs = model.category_probs(&[x]).unwrap();
            direct -= probs[y - 1].ln();
        }
        assert_relative_eq!(nll, direct, max_relative = 1e-10);
    }

    #[test]
    fn gradient_reference_value() {
        // single observation of the upper binary category, alpha = 0:
        // d nll / d alpha = -pdf(0)/cdf(0)
        let spec = NodeSpec::new(1, vec![], 2, vec![], LinkFunction::Probit).unwrap();
        let d = one_col(2, &[2]);
        let g = nll_gradient(&spec, &[0.0], &d).unwrap();
        assert_relative_eq!(g[0], -0.797_884_560_802_865, max_relative = 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for trial in 0..20 {
            let (s, l) = (rng.random_range(2..=4), rng.random_range(2..=5));
            let rows: Vec<(usize, usize)> = (0..40)
                .map(|_| (rng.random_range(1..=s), rng.random_range(1..=l)))
                .collect();
            let data = two_col((s, l), &rows);
            let with_parent = trial % 3 != 0;
            let parents: Vec<usize> = if with_parent { vec![1] } else { vec![] };
            let spec = NodeSpec::from_dataset(
                &data,
                2,
                &parents,
                if trial % 2 == 0 {
                    LinkFunction::Probit
                } else {
                    LinkFunction::Logit
                },
            )
            .unwrap();
            let params: Vec<f64> = (0..spec.num_params())
                .map(|_| rng.random_range(-1.5..1.5))
                .collect();
            let g = nll_gradient(&spec, &params, &data).unwrap();
            let h = 1e-5;
            for i in 0..params.len() {
                let mut hi = params.clone();
                let mut lo = params.clone();
                hi[i] += h;
                lo[i] -= h;
                let fd = (negative_log_likelihood(&spec, &hi, &data).unwrap()
                    - negative_log_likelihood(&spec, &lo, &data).unwrap())
                    / (2.0 * h);
                let err = (g[i] - fd).abs() / fd.abs().max(1.0);
                assert!(
                    err <= 1e-5,
                    "trial {trial} coord {i}: analytic {} vs fd {fd}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn intercept_only_fit_is_saturated() {
        let mut codes = Vec::new();
        codes.extend(std::iter::repeat_n(1, 25));
        codes.extend(std::iter::repeat_n(2, 25));
        codes.extend(std::iter::repeat_n(3, 50));
        let data = one_col(3, &codes);
        let spec = NodeSpec::from_dataset(&data, 1, &[], LinkFunction::Probit).unwrap();
        let m = fit(&spec, &data, &FitOptions::default()).unwrap();
        assert!(m.converged);
        assert_eq!(m.num_params, 2);
        let probs = m.category_probs(&[]).unwrap();
        assert_abs_diff_eq!(probs[0], 0.25, epsilon = 1e-8);
        assert_abs_diff_eq!(probs[1], 0.25, epsilon = 1e-8);
        assert_abs_diff_eq!(probs[2], 0.50, epsilon = 1e-8);
        assert_relative_eq!(m.alpha, 0.674_489_750_196_082, max_relative = 1e-8);
        assert_relative_eq!(m.cutpoints[0], 0.674_489_750_196_082, max_relative = 1e-8);
        assert_relative_eq!(m.loglik, -103.972_077_083_991_79, max_relative = 1e-10);
        // saturated start converges without iterating
        assert_eq!(m.iterations, 0);
    }

    #[test]
    fn fit_gradient_norm_small_at_mle() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let rows: Vec<(usize, usize)> = (0..300)
            .map(|_| {
                let x = rng.random_range(1..=3);
                let u: f64 = rng.random();
                let y = if u < 0.1 * x as f64 + 0.15 {
                    1
                } else if u < 0.7 {
                    2
                } else {
                    3
                };
                (x, y)
            })
            .collect();
        let data = two_col((3, 3), &rows);
        let spec = NodeSpec::from_dataset(&data, 2, &[1], LinkFunction::Probit).unwrap();
        let m = fit(&spec, &data, &FitOptions::default()).unwrap();
        assert!(m.converged);
        let params = pack_params(&m);
        let g = nll_gradient(&spec, &params, &data).unwrap();
        let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(gmax <= 1e-6, "gradient norm {gmax}");
        assert!(m.nll_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    fn pack_params(m: &FittedNodeModel) -> Vec<f64> {
        let mut v = vec![m.alpha];
        for b in &m.betas {
            v.extend_from_slice(b);
        }
        let cuts = m.full_cutpoints();
        for i in 1..cuts.len() {
            v.push((cuts[i] - cuts[i - 1]).ln());
        }
        v
    }

    #[test]
    fn perfect_prediction_triggers_separation() {
        let rows: Vec<(usize, usize)> = (0..60).map(|i| (i % 3 + 1, i % 3 + 1)).collect();
        let data = two_col((3, 3), &rows);
        let spec = NodeSpec::from_dataset(&data, 2, &[1], LinkFunction::Probit).unwrap();
        match fit(&spec, &data, &FitOptions::default()) {
            Err(Error::Separation(model)) => {
                assert!(!model.converged);
                assert!(model.loglik.is_finite());
                // clamped parameters respect the bound
                assert!(model.alpha.abs() <= 30.0 + 1e-12);
            }
            other => panic!("expected separation, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_target_detected() {
        let data = two_col((2, 3), &[(1, 2), (2, 2), (1, 2), (2, 2)]);
        let spec = NodeSpec::from_dataset(&data, 2, &[1], LinkFunction::Probit).unwrap();
        assert!(matches!(
            fit(&spec, &data, &FitOptions::default()),
            Err(Error::DegenerateTarget { node: 2 })
        ));
    }

    #[test]
    fn adding_parent_never_hurts_loglik_and_beats_grid_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let rows: Vec<(usize, usize)> = (0..120)
            .map(|_| {
                let x = rng.random_range(1..=2);
                let y = if rng.random::<f64>() < if x == 1 { 0.3 } else { 0.7 } {
                    2
                } else {
                    1
                };
                (x, y)
            })
            .collect();
        let data = two_col((2, 2), &rows);
        let marginal = NodeSpec::from_dataset(&data, 2, &[], LinkFunction::Probit).unwrap();
        let with_parent = NodeSpec::from_dataset(&data, 2, &[1], LinkFunction::Probit).unwrap();
        let m0 = fit(&marginal, &data, &FitOptions::default()).unwrap();
        let m1 = fit(&with_parent, &data, &FitOptions::default()).unwrap();
        assert!(m1.loglik >= m0.loglik - 1e-9);

        // exhaustive grid over (alpha, beta) cannot beat the fitted optimum
        let mut best = f64::NEG_INFINITY;
        let grid: Vec<f64> = (-60..=60).map(|i| i as f64 * 0.05).collect();
        for &a in &grid {
            for &b in &grid {
                let ll = -negative_log_likelihood(&with_parent, &[a, b], &data).unwrap();
                best = best.max(ll);
            }
        }
        assert!(m1.loglik >= best - 1e-6, "fit {} vs grid {best}", m1.loglik);
    }

    #[test]
    fn both_links_fit_and_logit_differs() {
        let rows: Vec<(usize, usize)> = (0..90).map(|i| (i % 3 + 1, (i % 9) / 3 + 1)).collect();
        let data = two_col((3, 3), &rows);
        for link in [LinkFunction::Probit, LinkFunction::Logit] {
            let spec = NodeSpec::from_dataset(&data, 2, &[1], link).unwrap();
            let m = fit(&spec, &data, &FitOptions::default()).unwrap();
            assert!(m.converged, "{link}");
            let cuts = m.full_cutpoints();
            assert!(
                cuts.windows(2).all(|w| w[0] < w[1]),
                "cutpoints must increase"
            );
            let probs = m.category_probs(&[1]).unwrap();
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(probs.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn nll_is_finite_for_all_sampled_parameters() {
        use proptest::prelude::*;
        proptest!(|(seed in 0u64..200, scale in 0.1f64..60.0)| {
            let mut r = ChaCha12Rng::seed_from_u64(seed);
            let rows: Vec<(usize, usize)> =
                (0..30).map(|_| (r.random_range(1..=3), r.random_range(1..=4))).collect();
            let data = two_col((3, 4), &rows);
            let spec = NodeSpec::from_dataset(&data, 2, &[1], LinkFunction::Probit).unwrap();
            let params: Vec<f64> =
                (0..spec.num_params()).map(|_| r.random_range(-scale..scale)).collect();
            let nll = negative_log_likelihood(&spec, &params, &data).unwrap();
            prop_assert!(nll.is_finite(), "nll {nll} at scale {scale}");
            prop_assert!(nll >= 0.0);
        });
    }

    #[test]
    fn unobserved_parent_level_fixed_at_zero_and_counted() {
        // parent declares 4 levels but level 3 never occurs
        let rows: Vec<(usize, usize)> = (0..80)
            .map(|i| {
                let x = [1, 2, 4][i % 3];
                (x, i % 2 + 1)
            })
            .collect();
        let data = OrdinalDataset::from_parts(
            vec!["x".into(), "y".into()],
            vec![4, 2],
            vec![
                rows.iter().map(|r| r.0).collect(),
                rows.iter().map(|r| r.1).collect(),
            ],
        )
        .unwrap();
        let spec = NodeSpec::from_dataset(&data, 2, &[1], LinkFunction::Probit).unwrap();
        assert_eq!(spec.num_params(), 1 + 3);
        let m = fit(&spec, &data, &FitOptions::default()).unwrap();
        assert_eq!(m.betas[0][2], 0.0, "unobserved level's effect stays 0");
        assert_eq!(m.num_params, 4, "still counted in K");
    }
}
