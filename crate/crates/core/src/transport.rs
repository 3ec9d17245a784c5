//! Exact balanced transportation problems over integers.
//!
//! Successive shortest paths with Bellman-Ford on the residual graph. Each
//! augmentation ships at least one unit, and after termination the residual
//! graph has no negative cycle, so shortest-path labels from a virtual root
//! give optimal dual prices.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TransportProblem {
    pub supply: Vec<i128>,
    pub demand: Vec<i128>,
    /// Row-major `supply.len() x demand.len()` nonnegative costs.
    pub cost: Vec<i128>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportSolution {
    /// `(source, sink, amount)` with `amount > 0`, sorted by `(source, sink)`.
    pub flow: Vec<(usize, usize, i128)>,
    pub total_cost: i128,
    /// Dual prices: `source_price[s] - sink_price[t] <= cost[s][t]`, with
    /// equality wherever flow is positive.
    pub source_price: Vec<i128>,
    pub sink_price: Vec<i128>,
}

fn add(a: i128, b: i128) -> Result<i128> {
    a.checked_add(b).ok_or(Error::Overflow)
}

impl TransportProblem {
    fn validate(&self) -> Result<()> {
        let (p, q) = (self.supply.len(), self.demand.len());
        if self.cost.len() != p * q {
            return Err(Error::Invalid("cost matrix has the wrong shape".into()));
        }
        if self.supply.iter().chain(&self.demand).any(|&m| m <= 0) {
            return Err(Error::Invalid("masses must be positive".into()));
        }
        if self.cost.iter().any(|&c| c < 0) {
            return Err(Error::Invalid("costs must be nonnegative".into()));
        }
        let s = self.supply.iter().try_fold(0i128, |a, &b| add(a, b))?;
        let d = self.demand.iter().try_fold(0i128, |a, &b| add(a, b))?;
        if s != d {
            return Err(Error::Invalid(format!(
                "unbalanced problem: supply {s}, demand {d}"
            )));
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<TransportSolution> {
        self.validate()?;
        let (p, q) = (self.supply.len(), self.demand.len());
        let c = |s: usize, t: usize| self.cost[s * q + t];
        let mut flow = vec![0i128; p * q];
        let mut rem_supply = self.supply.clone();
        let mut rem_demand = self.demand.clone();

        while rem_supply.iter().any(|&r| r > 0) {
            // Nodes 0..p are sources, p..p+q are sinks.
            let n = p + q;
            let mut dist: Vec<Option<i128>> = vec![None; n];
            let mut pred: Vec<Option<usize>> = vec![None; n];
            for s in 0..p {
                if rem_supply[s] > 0 {
                    dist[s] = Some(0);
                }
            }
            for _round in 0..n {
                let mut changed = false;
                for s in 0..p {
                    let Some(ds) = dist[s] else { continue };
                    for t in 0..q {
                        let cand = add(ds, c(s, t))?;
                        if dist[p + t].is_none_or(|dt| cand < dt) {
                            dist[p + t] = Some(cand);
                            pred[p + t] = Some(s);
                            changed = true;
                        }
                    }
                }
                for t in 0..q {
                    let Some(dt) = dist[p + t] else { continue };
                    for s in 0..p {
                        if flow[s * q + t] > 0 {
                            let cand = add(dt, -c(s, t))?;
                            if dist[s].is_none_or(|ds| cand < ds) {
                                dist[s] = Some(cand);
                                pred[s] = Some(p + t);
                                changed = true;
                            }
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            let sink = (0..q)
                .filter(|&t| rem_demand[t] > 0)
                .min_by_key(|&t| (dist[p + t].expect("complete bipartite graph"), t))
                .ok_or_else(|| Error::Invalid("supply left but no demand".into()))?;

            // Walk back to the originating source, collecting the bottleneck.
            let mut path = Vec::new();
            let mut node = p + sink;
            let mut bottleneck = rem_demand[sink];
            let mut guard = 0;
            while let Some(prev) = pred[node] {
                if node >= p {
                    path.push((prev, node - p, true));
                } else {
                    let t = prev - p;
                    bottleneck = bottleneck.min(flow[node * q + t]);
                    path.push((node, t, false));
                }
                node = prev;
                guard += 1;
                if guard > 2 * n {
                    return Err(Error::Invalid("cycle in shortest-path tree".into()));
                }
            }
            let origin = node;
            bottleneck = bottleneck.min(rem_supply[origin]);
            debug_assert!(bottleneck > 0);
            for (s, t, forward) in path {
                if forward {
                    flow[s * q + t] += bottleneck;
                } else {
                    flow[s * q + t] -= bottleneck;
                }
            }
            rem_supply[origin] -= bottleneck;
            rem_demand[sink] -= bottleneck;
        }

        // Dual prices from shortest paths rooted at every node with label 0.
        let n = p + q;
        let mut label = vec![0i128; n];
        let mut settled = false;
        for _ in 0..=n {
            let mut changed = false;
            for s in 0..p {
                for t in 0..q {
                    let cand = add(label[s], c(s, t))?;
                    if cand < label[p + t] {
                        label[p + t] = cand;
                        changed = true;
                    }
                    if flow[s * q + t] > 0 {
                        let cand = add(label[p + t], -c(s, t))?;
                        if cand < label[s] {
                            label[s] = cand;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                settled = true;
                break;
            }
        }
        if !settled {
            return Err(Error::Invalid(
                "negative cycle in residual graph after optimization".into(),
            ));
        }

        let mut out = Vec::new();
        let mut total_cost = 0i128;
        for s in 0..p {
            for t in 0..q {
                let f = flow[s * q + t];
                if f > 0 {
                    out.push((s, t, f));
                    let term = f.checked_mul(c(s, t)).ok_or(Error::Overflow)?;
                    total_cost = add(total_cost, term)?;
                }
            }
        }
        Ok(TransportSolution {
            flow: out,
            total_cost,
            source_price: label[..p].iter().map(|&l| -l).collect(),
            sink_price: label[p..].iter().map(|&l| -l).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_duals(prob: &TransportProblem, sol: &TransportSolution) {
        let q = prob.demand.len();
        for s in 0..prob.supply.len() {
            for t in 0..q {
                assert!(sol.source_price[s] - sol.sink_price[t] <= prob.cost[s * q + t]);
            }
        }
        for &(s, t, _) in &sol.flow {
            assert_eq!(sol.source_price[s] - sol.sink_price[t], prob.cost[s * q + t]);
        }
        let dual: i128 = prob
            .supply
            .iter()
            .zip(&sol.source_price)
            .map(|(a, u)| a * u)
            .sum::<i128>()
            - prob
                .demand
                .iter()
                .zip(&sol.sink_price)
                .map(|(b, v)| b * v)
                .sum::<i128>();
        assert_eq!(dual, sol.total_cost);
    }

    #[test]
    fn two_by_two_prefers_diagonal() {
        let prob = TransportProblem {
            supply: vec![3, 2],
            demand: vec![2, 3],
            cost: vec![1, 4, 5, 1],
        };
        let sol = prob.solve().unwrap();
        // 2 units s0->t0 (cost 2), 1 unit s0->t1 (4), 2 units s1->t1 (2)
        assert_eq!(sol.total_cost, 8);
        check_duals(&prob, &sol);
    }

    #[test]
    fn rerouting_through_reverse_arcs() {
        // Greedy first augmentation s0->t0 must be undone partially.
        let prob = TransportProblem {
            supply: vec![1, 1],
            demand: vec![1, 1],
            cost: vec![0, 1, 0, 10],
        };
        let sol = prob.solve().unwrap();
        assert_eq!(sol.total_cost, 1);
        check_duals(&prob, &sol);
    }

    #[test]
    fn rejects_unbalanced_and_nonpositive() {
        let bad = TransportProblem {
            supply: vec![2],
            demand: vec![1],
            cost: vec![1],
        };
        assert!(bad.solve().is_err());
        let bad = TransportProblem {
            supply: vec![0],
            demand: vec![0],
            cost: vec![1],
        };
        assert!(bad.solve().is_err());
    }

    #[test]
    fn empty_problem() {
        let sol = TransportProblem {
            supply: vec![],
            demand: vec![],
            cost: vec![],
        }
        .solve()
        .unwrap();
        assert_eq!(sol.total_cost, 0);
        assert!(sol.flow.is_empty());
    }
}
