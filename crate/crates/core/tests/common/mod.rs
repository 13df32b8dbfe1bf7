#![allow(dead_code)]

use cptgen_core::{
    AnchorSet, CompatibilityMap, Distribution, NetworkSpec, ParentSpec, ParentalConfiguration,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Raw ingredients of a random instance, kept alongside the built types so
/// oracles can work from plain arrays.
pub struct Instance {
    pub spec: NetworkSpec,
    pub anchors: AnchorSet,
    /// `comp[p][s]` = state vector of Comp(Y_p = s).
    pub comp: Vec<Vec<Vec<usize>>>,
    /// Anchor values keyed by state vector.
    pub table: Vec<(Vec<usize>, Vec<f64>)>,
}

impl Instance {
    pub fn anchor_values(&self, config: &[usize]) -> &[f64] {
        &self
            .table
            .iter()
            .find(|(c, _)| c == config)
            .expect("anchor present")
            .1
    }
}

pub fn random_simplex(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    random_simplex(rng, n)
}

/// Random spec with `n ≤ max_n` parents, `k_i ≤ max_k`, `m ≤ max_m`,
/// and a random self-consistent compatibility map.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_k: usize, max_m: usize) -> Instance {
    let n = rng.random_range(1..=max_n);
    let arities: Vec<usize> = (0..n).map(|_| rng.random_range(2..=max_k)).collect();
    let m = rng.random_range(1..=max_m);
    let weights = random_weights(rng, n);
    let parents = arities
        .iter()
        .zip(&weights)
        .enumerate()
        .map(|(i, (&k, &w))| ParentSpec {
            name: format!("Y{i}"),
            states: (0..k).map(|s| format!("s{s}")).collect(),
            weight: w,
        })
        .collect();
    let child: Vec<String> = (0..=m).map(|l| format!("x{l}")).collect();
    let spec = NetworkSpec {
        child_name: "X".into(),
        child_states: child,
        parents,
    }
    .into_valid()
    .unwrap();

    let diagonal = rng.random_bool(0.3) && arities.iter().all(|&k| k == arities[0]);
    let comp: Vec<Vec<Vec<usize>>> = arities
        .iter()
        .enumerate()
        .map(|(p, &k)| {
            (0..k)
                .map(|s| {
                    arities
                        .iter()
                        .enumerate()
                        .map(|(q, &kq)| {
                            if q == p || diagonal {
                                s
                            } else {
                                rng.random_range(0..kq)
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let entries = comp.iter().enumerate().flat_map(|(p, row)| {
        let spec = &spec;
        row.iter()
            .enumerate()
            .map(move |(s, c)| ((p, s), ParentalConfiguration::new(spec, c.clone()).unwrap()))
    });
    let compat = CompatibilityMap::new(&spec, entries.collect::<Vec<_>>()).unwrap();

    let mut table: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    for row in &comp {
        for c in row {
            if !table.iter().any(|(t, _)| t == c) {
                table.push((c.clone(), random_simplex(rng, m + 1)));
            }
        }
    }
    let anchors = AnchorSet::new(
        compat,
        table.iter().map(|(c, v)| {
            (
                ParentalConfiguration::new(&spec, c.clone()).unwrap(),
                Distribution::new(v.clone()).unwrap(),
            )
        }),
    )
    .unwrap();

    Instance {
        spec,
        anchors,
        comp,
        table,
    }
}

/// Naive weighted sum straight from the raw arrays: nested loops over
/// configurations, parents and outcomes.
pub fn naive_cpt(inst: &Instance, weights: &[f64]) -> Vec<Vec<f64>> {
    let arities: Vec<usize> = inst.comp.iter().map(Vec::len).collect();
    let width = inst.table[0].1.len();
    let total: usize = arities.iter().product();
    let mut rows = Vec::with_capacity(total);
    for mut index in 0..total {
        // decode mixed radix, last parent fastest
        let mut states = vec![0; arities.len()];
        for p in (0..arities.len()).rev() {
            states[p] = index % arities[p];
            index /= arities[p];
        }
        let mut row = vec![0.0; width];
        for (p, &s) in states.iter().enumerate() {
            let anchor = inst.anchor_values(&inst.comp[p][s]);
            for l in 0..width {
                row[l] += weights[p] * anchor[l];
            }
        }
        rows.push(row);
    }
    rows
}

/// Moves `q` outside the convex hull of `anchors` by raising one outcome to
/// `eps` above the largest value any anchor gives it, taking the mass
/// proportionally from the other outcomes. Every blend of the anchors then
/// misses the result by at least `eps` on that outcome.
pub fn escape_hull(q: &[f64], anchors: &[&[f64]], eps: f64) -> Option<Vec<f64>> {
    let width = q.len();
    let (l, ceiling) = (0..width)
        .map(|l| (l, anchors.iter().map(|a| a[l]).fold(0.0f64, f64::max)))
        .filter(|(l, c)| c + eps < 1.0 && q[*l] < 1.0)
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let target = ceiling + eps;
    let scale = (1.0 - target) / (1.0 - q[l]);
    let mut out: Vec<f64> = q.iter().map(|v| v * scale).collect();
    out[l] = target;
    Some(out)
}
