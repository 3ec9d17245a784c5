//! A finite, single-box stand-in for the derivation of a set.

use std::collections::HashMap;
use std::sync::Mutex;

use num_traits::Signed;
use rayon::prelude::*;

use super::game::GameTranscript;
use crate::error::Result;
use crate::freespace::{norm, pair, FreeVector};
use crate::lipschitz::LipschitzFunction;
use crate::metric::MetricSpace;
use crate::rational::Rational;

struct NormCache<'a> {
    space: &'a MetricSpace,
    vectors: &'a [FreeVector],
    memo: Mutex<HashMap<(usize, usize), Rational>>,
}

impl NormCache<'_> {
    fn distance(&self, a: usize, b: usize) -> Result<Rational> {
        let key = (a.min(b), a.max(b));
        if let Some(d) = self.memo.lock().unwrap().get(&key) {
            return Ok(d.clone());
        }
        let d = norm(self.space, &(&self.vectors[a] - &self.vectors[b]))?;
        self.memo.lock().unwrap().insert(key, d.clone());
        Ok(d)
    }
}

/// Runs `rounds` rounds of: keep `v` if the box
/// `{w in S : |<f, w - v>| <= eta for all f}` inside the current survivors `S`
/// has diameter at least `epsilon`. Returns the survivors (deduplicated, in
/// input order). The output shrinks as `rounds` grows.
pub fn relative_derivation_oracle(
    space: &MetricSpace,
    candidates: &[FreeVector],
    functionals: &[LipschitzFunction],
    eta: &Rational,
    epsilon: &Rational,
    rounds: usize,
) -> Result<Vec<FreeVector>> {
    let base = space.base();
    let mut vectors: Vec<FreeVector> = Vec::new();
    for v in candidates {
        let b = v.balanced(base);
        if !vectors.contains(&b) {
            vectors.push(b);
        }
    }
    let pairings: Vec<Vec<Rational>> = vectors
        .iter()
        .map(|v| functionals.iter().map(|f| pair(f, v)).collect())
        .collect::<Result<_>>()?;
    let cache = NormCache {
        space,
        vectors: &vectors,
        memo: Mutex::new(HashMap::new()),
    };
    let close = |a: usize, b: usize| {
        pairings[a]
            .iter()
            .zip(&pairings[b])
            .all(|(x, y)| (x - y).abs() <= *eta)
    };

    let mut survivors: Vec<usize> = (0..vectors.len()).collect();
    for _ in 0..rounds {
        let next: Vec<Option<usize>> = survivors
            .par_iter()
            .map(|&v| -> Result<Option<usize>> {
                let in_box: Vec<usize> = survivors.iter().copied().filter(|&w| close(v, w)).collect();
                // Pairs through `v` first: a surviving target usually has its
                // own answer in the box.
                for &w in &in_box {
                    if w != v && cache.distance(v, w)? >= *epsilon {
                        return Ok(Some(v));
                    }
                }
                for (k, &a) in in_box.iter().enumerate() {
                    for &b in &in_box[k + 1..] {
                        if a != v && b != v && cache.distance(a, b)? >= *epsilon {
                            return Ok(Some(v));
                        }
                    }
                }
                Ok(None)
            })
            .collect::<Result<_>>()?;
        let next: Vec<usize> = next.into_iter().flatten().collect();
        if next == survivors {
            break;
        }
        survivors = next;
    }
    Ok(survivors.into_iter().map(|i| vectors[i].clone()).collect())
}

/// True when the root target survives `depth` rounds of the oracle on the
/// transcript's vectors for every family posed at every internal node (and
/// there is at least one such family, unless the depth is 0).
pub fn transcript_survives(space: &MetricSpace, t: &GameTranscript) -> Result<bool> {
    let depth = t.root.depth;
    if depth == 0 {
        return Ok(true);
    }
    let families = t.universal_families();
    if families.is_empty() {
        return Ok(false);
    }
    let vectors = t.vectors();
    let root = t.root.target.balanced(space.base());
    for (functionals, eta) in families {
        let alive = relative_derivation_oracle(space, &vectors, &functionals, &eta, &t.root.epsilon, depth)?;
        if !alive.contains(&root) {
            return Ok(false);
        }
    }
    Ok(true)
}
