#![allow(dead_code)]

use std::path::PathBuf;

use cptgen::document::{ElicitationDocument, RawDocument, Strictness};
use cptgen_core::{AnchorSet, CompatibilityMap, Distribution, NetworkSpec, ParentSpec, ParentalConfiguration};
use indexmap::IndexMap;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Gamma};

pub const STATES: [&str; 5] = ["vl", "l", "a", "h", "vh"];

/// Columns of the elicited anchor table, one per state of the diagonal.
pub const ELICITED: [[f64; 5]; 5] = [
    [0.8, 0.15, 0.03, 0.015, 0.005],
    [0.08, 0.8, 0.08, 0.03, 0.01],
    [0.02, 0.08, 0.8, 0.08, 0.02],
    [0.01, 0.03, 0.08, 0.8, 0.08],
    [0.005, 0.015, 0.03, 0.15, 0.8],
];

pub const COL1: [f64; 5] = [0.4025, 0.0825, 0.03, 0.0825, 0.4025];
pub const COL2: [f64; 5] = [0.7205, 0.1365, 0.03, 0.0285, 0.0845];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_bytes(name: &str) -> Vec<u8> {
    std::fs::read(fixture(name)).expect("fixture present")
}

pub fn load_fixture(name: &str) -> ElicitationDocument {
    ElicitationDocument::load(&fixture_bytes(name), Strictness::Strict).expect("fixture loads")
}

pub fn labels(pairs: &[(&str, &str)]) -> IndexMap<String, String> {
    pairs.iter().map(|(p, s)| (p.to_string(), s.to_string())).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Flat Dirichlet sample.
pub fn random_simplex(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let gamma = Gamma::new(1.0, 1.0).unwrap();
    let raw: Vec<f64> = (0..len).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Random valid document with `n ≤ max_n` parents, `2 ≤ k_i ≤ max_k`,
/// `1 ≤ m ≤ max_m`, and a random self-consistent compatibility map
/// (diagonal some of the time when arities agree).
pub fn random_document(rng: &mut ChaCha8Rng, max_n: usize, max_k: usize, max_m: usize) -> ElicitationDocument {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    let shared_k = rng.random_range(2..=max_k);
    let same_arity = rng.random_bool(0.3);
    let arities: Vec<usize> = (0..n)
        .map(|_| if same_arity { shared_k } else { rng.random_range(2..=max_k) })
        .collect();
    let weights = random_simplex(rng, n);
    let spec = NetworkSpec {
        child_name: "X".into(),
        child_states: (0..=m).map(|l| format!("x{l}")).collect(),
        parents: arities
            .iter()
            .zip(&weights)
            .enumerate()
            .map(|(i, (&k, &w))| ParentSpec {
                name: format!("Y{i}"),
                states: (0..k).map(|s| format!("s{s}")).collect(),
                weight: w,
            })
            .collect(),
    }
    .into_valid()
    .expect("random spec is valid");

    let diagonal = same_arity && rng.random_bool(0.5);
    let mut entries = Vec::new();
    for (p, &k) in arities.iter().enumerate() {
        for s in 0..k {
            let states: Vec<usize> = arities
                .iter()
                .enumerate()
                .map(|(q, &kq)| if q == p || diagonal { s } else { rng.random_range(0..kq) })
                .collect();
            entries.push(((p, s), ParentalConfiguration::new(&spec, states).unwrap()));
        }
    }
    let compat = CompatibilityMap::new(&spec, entries).unwrap();
    let anchors: Vec<(ParentalConfiguration, Distribution)> = compat
        .distinct_configurations()
        .into_iter()
        .map(|c| (c.clone(), Distribution::new(random_simplex(rng, m + 1)).unwrap()))
        .collect();
    let set = AnchorSet::new(compat, anchors).unwrap();
    let doc = ElicitationDocument::from_model(&set, IndexMap::new()).unwrap();
    // go through the text form so the loader is exercised too
    ElicitationDocument::load(doc.to_canonical_bytes(), Strictness::Strict).unwrap()
}

/// Weighted sum computed straight from the raw document by label lookup:
/// for each configuration (last parent fastest), for each parent, find the
/// compatibility entry by name and the anchor record by label equality.
pub fn naive_rows(raw: &RawDocument) -> Vec<Vec<f64>> {
    let parents = &raw.network.parents;
    let width = raw.network.child.states.len();
    let comp = |p: usize, s: usize| -> IndexMap<String, String> {
        let name = &parents[p].name;
        let state = &parents[p].states[s];
        if let Some(e) = raw
            .compatibility
            .entries
            .iter()
            .find(|e| &e.parent == name && &e.state == state)
        {
            return e.configuration.clone();
        }
        assert!(raw.compatibility.diagonal, "no entry for {name}={state}");
        parents.iter().map(|q| (q.name.clone(), q.states[s].clone())).collect()
    };
    let anchor = |config: &IndexMap<String, String>| -> &Vec<f64> {
        &raw.anchors
            .iter()
            .find(|a| same_labels(&a.configuration, config))
            .expect("anchor for compatible configuration")
            .distribution
    };
    let total: usize = parents.iter().map(|p| p.states.len()).product();
    let mut rows = Vec::with_capacity(total);
    for index in 0..total {
        let mut rest = index;
        let mut states = vec![0; parents.len()];
        for p in (0..parents.len()).rev() {
            states[p] = rest % parents[p].states.len();
            rest /= parents[p].states.len();
        }
        let mut row = vec![0.0; width];
        for (p, &s) in states.iter().enumerate() {
            let a = anchor(&comp(p, s));
            for l in 0..width {
                row[l] += parents[p].weight * a[l];
            }
        }
        rows.push(row);
    }
    rows
}

fn same_labels(a: &IndexMap<String, String>, b: &IndexMap<String, String>) -> bool {
    a.len() == b.len() && a.iter().all(|(k, v)| b.get(k) == Some(v))
}

/// Moves `q` at least `eps` (in L∞) outside the convex hull of `anchors`
/// by lifting the outcome whose anchor maximum is smallest to `eps` above
/// that maximum and taking the mass proportionally from the other outcomes.
pub fn escape_hull(q: &[f64], anchors: &[&[f64]], eps: f64) -> Option<Vec<f64>> {
    let (l, ceiling) = (0..q.len())
        .map(|l| (l, anchors.iter().map(|a| a[l]).fold(0.0f64, f64::max)))
        .filter(|(l, c)| c + eps < 1.0 && q[*l] < 1.0)
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let target = ceiling + eps;
    let scale = (1.0 - target) / (1.0 - q[l]);
    let mut out: Vec<f64> = q.iter().map(|v| v * scale).collect();
    out[l] = target;
    Some(out)
}
