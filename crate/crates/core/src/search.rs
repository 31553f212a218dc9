//! Structure estimation: exhaustive BIC minimization for tiny graphs,
//! greedy hill-climbing over single-edge moves otherwise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::OrdinalDataset;
use crate::error::Result;
use crate::graph::{enumerate_dags, Dag, Move, MoveKind, NodeId};
use crate::score::{global_bic, local_bic, sum_bics, LocalScore, ScoreCache, ScoreOptions};

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct SearchOptions {
    pub score: ScoreOptions,
    /// Cap on parent-set size enforced during move generation.
    pub max_parents: Option<usize>,
    /// Apply the first strictly improving move per sweep instead of the best
    /// one. Default is best-improvement.
    pub first_improvement: bool,
}

/// Outcome of a structure search.
#[derive(Debug, Clone)]
pub struct DiscoveryResult {
    pub graph: Dag,
    pub bic: f64,
    pub local_scores: Vec<LocalScore>,
    /// Greedy: number of applied moves. Exhaustive: number of graphs scored.
    pub iterations: usize,
    pub moves_taken: Vec<Move>,
    /// Cache-miss fits performed over the whole search.
    pub score_evaluations: usize,
}

struct BestGraph {
    bic: f64,
    edges: Vec<(NodeId, NodeId)>,
    graph: Dag,
    locals: Vec<LocalScore>,
}

/// Score every DAG on `data.p()` nodes and return the BIC minimizer.
/// Ties break toward fewer edges, then the lexicographically smaller edge set.
pub fn exhaustive_search(data: &OrdinalDataset, opts: &SearchOptions) -> Result<DiscoveryResult> {
    let cache = ScoreCache::new();
    let mut best: Option<BestGraph> = None;
    let mut scored = 0usize;
    for g in enumerate_dags(data.p())? {
        if let Some(m) = opts.max_parents {
            if (1..=g.num_nodes()).any(|j| g.parents(j).unwrap().len() > m) {
                continue;
            }
        }
        let (bic, locals) = global_bic(&g, data, &opts.score, &cache)?;
        scored += 1;
        let edges = g.edges();
        let better = match &best {
            None => true,
            Some(b) => {
                bic < b.bic || (bic == b.bic && (edges.len(), &edges) < (b.edges.len(), &b.edges))
            }
        };
        if better {
            best = Some(BestGraph {
                bic,
                edges,
                graph: g,
                locals,
            });
        }
    }
    let best = best.expect("at least the empty graph is scored");
    Ok(DiscoveryResult {
        graph: best.graph,
        bic: best.bic,
        local_scores: best.locals,
        iterations: scored,
        moves_taken: Vec::new(),
        score_evaluations: cache.fresh_fits(),
    })
}

/// Parent sets after applying `m`, for the nodes whose sets change.
fn changed_parent_sets(g: &Dag, m: Move) -> Vec<(NodeId, Vec<NodeId>)> {
    let pa = |j: NodeId| -> Vec<NodeId> { g.parents(j).unwrap().iter().copied().collect() };
    match m.kind {
        MoveKind::Add => {
            let mut p = pa(m.target);
            p.push(m.source);
            p.sort_unstable();
            vec![(m.target, p)]
        }
        MoveKind::Delete => {
            let p = pa(m.target)
                .into_iter()
                .filter(|&x| x != m.source)
                .collect();
            vec![(m.target, p)]
        }
        MoveKind::Reverse => {
            let pt = pa(m.target)
                .into_iter()
                .filter(|&x| x != m.source)
                .collect();
            let mut ps = pa(m.source);
            ps.push(m.target);
            ps.sort_unstable();
            vec![(m.target, pt), (m.source, ps)]
        }
    }
}

/// Global BIC of the graph reached by `m`, formed with the same node-order
/// summation as `global_bic` so scores are exactly comparable.
fn candidate_bic(
    g: &Dag,
    m: Move,
    locals: &[LocalScore],
    data: &OrdinalDataset,
    opts: &SearchOptions,
    cache: &ScoreCache,
) -> Result<f64> {
    let mut replaced = locals.to_vec();
    for (node, parents) in changed_parent_sets(g, m) {
        replaced[node - 1] = local_bic(node, &parents, data, &opts.score, cache)?;
    }
    Ok(sum_bics(&replaced))
}

/// Greedy hill-climbing from `initial`: each iteration scores all graphs at
/// edit distance one and applies the move with the largest BIC decrease
/// (canonical move order breaks ties); stops at a local optimum.
pub fn greedy_search(
    data: &OrdinalDataset,
    initial: &Dag,
    opts: &SearchOptions,
) -> Result<DiscoveryResult> {
    let cache = ScoreCache::new();
    let mut graph = initial.clone();
    let (mut bic, mut locals) = global_bic(&graph, data, &opts.score, &cache)?;
    let mut moves_taken = Vec::new();

    loop {
        let moves = graph.legal_moves_capped(opts.max_parents);
        let chosen = if opts.first_improvement {
            let mut found = None;
            for &m in &moves {
                let cand = candidate_bic(&graph, m, &locals, data, opts, &cache)?;
                if cand < bic {
                    found = Some((m, cand));
                    break;
                }
            }
            found
        } else {
            let scores: Vec<f64> = moves
                .par_iter()
                .map(|&m| candidate_bic(&graph, m, &locals, data, opts, &cache))
                .collect::<Result<_>>()?;
            moves
                .iter()
                .zip(&scores)
                .filter(|(_, &s)| s < bic)
                .min_by(|(_, a), (_, b)| a.total_cmp(b))
                .map(|(&m, &s)| (m, s))
        };
        let Some((mv, new_bic)) = chosen else { break };
        graph = graph.apply_move(mv)?;
        for (node, parents) in changed_parent_sets_applied(&graph, mv) {
            locals[node - 1] = local_bic(node, &parents, data, &opts.score, &cache)?;
        }
        debug_assert_eq!(sum_bics(&locals).to_bits(), new_bic.to_bits());
        bic = new_bic;
        moves_taken.push(mv);
    }

    Ok(DiscoveryResult {
        graph,
        bic,
        local_scores: locals,
        iterations: moves_taken.len(),
        moves_taken,
        score_evaluations: cache.fresh_fits(),
    })
}

/// Current parent sets of the nodes `m` touched (graph already updated).
fn changed_parent_sets_applied(g: &Dag, m: Move) -> Vec<(NodeId, Vec<NodeId>)> {
    let pa = |j: NodeId| -> Vec<NodeId> { g.parents(j).unwrap().iter().copied().collect() };
    match m.kind {
        MoveKind::Add | MoveKind::Delete => vec![(m.target, pa(m.target))],
        MoveKind::Reverse => vec![(m.target, pa(m.target)), (m.source, pa(m.source))],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::OrdinalDataset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn independent_pair(n: usize, seed: u64) -> OrdinalDataset {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        OrdinalDataset::from_parts(
            vec!["x".into(), "y".into()],
            vec![3, 3],
            vec![
                (0..n).map(|_| rng.random_range(1..=3)).collect(),
                (0..n).map(|_| rng.random_range(1..=3)).collect(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn exhaustive_scores_all_graphs_with_cache_reuse() {
        let data = independent_pair(200, 1);
        // widen to 3 columns
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let data = OrdinalDataset::from_parts(
            vec!["a".into(), "b".into(), "c".into()],
            vec![3, 3, 3],
            vec![
                data.column(1).to_vec(),
                data.column(2).to_vec(),
                (0..200).map(|_| rng.random_range(1..=3)).collect(),
            ],
        )
        .unwrap();
        let r = exhaustive_search(&data, &SearchOptions::default()).unwrap();
        assert_eq!(r.iterations, 25, "25 DAGs on 3 nodes");
        // distinct (node, parents) pairs on 3 nodes: 3 * 2^2 = 12
        assert!(r.score_evaluations <= 12);
        assert!(r.score_evaluations <= 3 * 12);
    }

    #[test]
    fn exhaustive_prefers_empty_graph_on_independent_columns() {
        let mut empty_wins = 0;
        for seed in 0..10 {
            let data = independent_pair(500, seed);
            let r = exhaustive_search(&data, &SearchOptions::default()).unwrap();
            if r.graph.num_edges() == 0 {
                empty_wins += 1;
            }
        }
        assert!(empty_wins >= 9, "empty graph won only {empty_wins}/10");
    }

    #[test]
    fn exhaustive_rejects_large_p() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let cols: Vec<Vec<usize>> = (0..5)
            .map(|_| (0..30).map(|_| rng.random_range(1..=2)).collect())
            .collect();
        let names = (1..=5).map(|i| format!("x{i}")).collect();
        let data = OrdinalDataset::from_parts(names, vec![2; 5], cols).unwrap();
        assert!(matches!(
            exhaustive_search(&data, &SearchOptions::default()),
            Err(crate::error::Error::TooManyNodes { .. })
        ));
    }

    #[test]
    fn greedy_matches_exhaustive_on_small_data() {
        let data = independent_pair(300, 7);
        let opts = SearchOptions::default();
        let ex = exhaustive_search(&data, &opts).unwrap();
        let gr = greedy_search(&data, &Dag::empty(2).unwrap(), &opts).unwrap();
        assert!(gr.bic >= ex.bic - 1e-12);
    }

    #[test]
    fn greedy_is_deterministic_and_locally_optimal() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 400;
        let x: Vec<usize> = (0..n).map(|_| rng.random_range(1..=3)).collect();
        let y: Vec<usize> = x
            .iter()
            .map(|&v| {
                let u: f64 = rng.random();
                if u < 0.15 + 0.25 * v as f64 {
                    (v % 3) + 1
                } else {
                    rng.random_range(1..=3)
                }
            })
            .collect();
        let data = OrdinalDataset::from_parts(vec!["x".into(), "y".into()], vec![3, 3], vec![x, y])
            .unwrap();
        let opts = SearchOptions::default();
        let init = Dag::empty(2).unwrap();
        let a = greedy_search(&data, &init, &opts).unwrap();
        let b = greedy_search(&data, &init, &opts).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.bic.to_bits(), b.bic.to_bits());
        assert_eq!(a.moves_taken, b.moves_taken);

        // local optimality certificate
        let cache = ScoreCache::new();
        let (bic, locals) = global_bic(&a.graph, &data, &opts.score, &cache).unwrap();
        assert_eq!(bic.to_bits(), a.bic.to_bits());
        for m in a.graph.legal_moves() {
            let cand = candidate_bic(&a.graph, m, &locals, &data, &opts, &cache).unwrap();
            assert!(cand >= bic, "{m} would still improve");
        }
    }

    #[test]
    fn max_parents_zero_returns_empty_graph() {
        let data = independent_pair(100, 11);
        let opts = SearchOptions {
            max_parents: Some(0),
            ..Default::default()
        };
        let r = greedy_search(&data, &Dag::empty(2).unwrap(), &opts).unwrap();
        assert_eq!(r.graph.num_edges(), 0);
        assert!(r.moves_taken.is_empty());
    }

    #[test]
    fn max_parents_cap_is_respected() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let n = 300;
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(1..=3)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(1..=3)).collect();
        let c: Vec<usize> = (0..n)
            .map(|i| {
                let base = (a[i] + b[i]) / 2;
                if rng.random::<f64>() < 0.7 {
                    base.clamp(1, 3)
                } else {
                    rng.random_range(1..=3)
                }
            })
            .collect();
        let data = OrdinalDataset::from_parts(
            vec!["a".into(), "b".into(), "c".into()],
            vec![3, 3, 3],
            vec![a, b, c],
        )
        .unwrap();
        let opts = SearchOptions {
            max_parents: Some(1),
            ..Default::default()
        };
        let r = greedy_search(&data, &Dag::empty(3).unwrap(), &opts).unwrap();
        for j in 1..=3 {
            assert!(r.graph.parents(j).unwrap().len() <= 1);
        }
        // unset cap equals a huge cap
        let unset = SearchOptions::default();
        let huge = SearchOptions {
            max_parents: Some(99),
            ..Default::default()
        };
        let r1 = greedy_search(&data, &Dag::empty(3).unwrap(), &unset).unwrap();
        let r2 = greedy_search(&data, &Dag::empty(3).unwrap(), &huge).unwrap();
        assert_eq!(r1.graph, r2.graph);
    }

    #[test]
    fn first_improvement_also_reaches_local_optimum() {
        let data = independent_pair(250, 17);
        let opts = SearchOptions {
            first_improvement: true,
            ..Default::default()
        };
        let r = greedy_search(&data, &Dag::empty(2).unwrap(), &opts).unwrap();
        let cache = ScoreCache::new();
        let (bic, locals) = global_bic(&r.graph, &data, &opts.score, &cache).unwrap();
        for m in r.graph.legal_moves() {
            let cand = candidate_bic(&r.graph, m, &locals, &data, &opts, &cache).unwrap();
            assert!(cand >= bic);
        }
    }
}
