mod common;

use common::{naive_cpt, random_instance, random_weights, Instance};
use cptgen_core::{
    enumerate_configurations, generate_cpt, generate_row, AnchorSet, CompatibilityMap,
    Distribution, NetworkSpec, ParentalConfiguration,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn engine_matches_naive_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let inst = random_instance(&mut rng, 3, 4, 3);
        let result = generate_cpt(&inst.spec, &inst.anchors).unwrap();
        let oracle = naive_cpt(&inst, &inst.spec.weights());
        assert_eq!(result.cpt.len(), oracle.len());
        for (row, want) in result.cpt.rows().iter().zip(&oracle) {
            for (g, w) in row.values().iter().zip(want) {
                worst = worst.max((g - w).abs());
            }
        }
    }
    assert!(worst <= 1e-12, "max deviation {worst:e}");
}

#[test]
fn rows_are_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..300 {
        let inst = random_instance(&mut rng, 4, 5, 4);
        let result = generate_cpt(&inst.spec, &inst.anchors).unwrap();
        for row in result.cpt.rows() {
            assert!(row.values().iter().all(|v| *v >= 0.0));
            let sum: f64 = row.values().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12, "row sum {sum}");
        }
    }
}

#[test]
fn rows_are_linear_in_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for _ in 0..200 {
        let inst = random_instance(&mut rng, 4, 4, 3);
        let n = inst.spec.parent_count();
        let u = random_weights(&mut rng, n);
        let v = random_weights(&mut rng, n);
        let lambda: f64 = rng.random();
        let mix: Vec<f64> = u.iter().zip(&v).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let su = inst.spec.with_weights(&u).unwrap();
        let sv = inst.spec.with_weights(&v).unwrap();
        let sm = inst.spec.with_weights(&mix).unwrap();
        for config in enumerate_configurations(&inst.spec) {
            let ru = generate_row(&su, &inst.anchors, &config).unwrap();
            let rv = generate_row(&sv, &inst.anchors, &config).unwrap();
            let rm = generate_row(&sm, &inst.anchors, &config).unwrap();
            for l in 0..ru.len() {
                let want = lambda * ru[l] + (1.0 - lambda) * rv[l];
                assert!((rm[l] - want).abs() <= 1e-12);
            }
        }
    }
}

fn permuted(inst: &Instance, perm: &[usize]) -> (NetworkSpec, AnchorSet) {
    // new parent i is old parent perm[i]
    let mut spec = inst.spec.clone();
    spec.parents = perm.iter().map(|&p| inst.spec.parents[p].clone()).collect();
    let reorder = |states: &[usize]| -> Vec<usize> { perm.iter().map(|&p| states[p]).collect() };
    let mut entries = Vec::new();
    for (new_p, &old_p) in perm.iter().enumerate() {
        for (s, c) in inst.comp[old_p].iter().enumerate() {
            entries.push(((new_p, s), ParentalConfiguration::new(&spec, reorder(c)).unwrap()));
        }
    }
    let compat = CompatibilityMap::new(&spec, entries).unwrap();
    let anchors = inst.table.iter().map(|(c, v)| {
        (
            ParentalConfiguration::new(&spec, reorder(c)).unwrap(),
            Distribution::new(v.clone()).unwrap(),
        )
    });
    (spec.clone(), AnchorSet::new(compat, anchors).unwrap())
}

#[test]
fn reordering_parents_leaves_rows_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    for _ in 0..100 {
        let inst = random_instance(&mut rng, 4, 4, 3);
        let n = inst.spec.parent_count();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let (spec2, anchors2) = permuted(&inst, &perm);
        for config in enumerate_configurations(&inst.spec) {
            let original = generate_row(&inst.spec, &inst.anchors, &config).unwrap();
            let moved = ParentalConfiguration::new(
                &spec2,
                perm.iter().map(|&p| config.state(p)).collect(),
            )
            .unwrap();
            let again = generate_row(&spec2, &anchors2, &moved).unwrap();
            // only the float summation order differs
            for l in 0..original.len() {
                assert!((original[l] - again[l]).abs() <= 1e-15);
            }
        }
    }
}

#[test]
fn diagonal_rows_equal_their_anchor_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    for _ in 0..200 {
        let n = rng.random_range(1..=4);
        let k = rng.random_range(2..=5);
        let m = rng.random_range(1..=4);
        let states: Vec<String> = (0..k).map(|s| format!("s{s}")).collect();
        let weights = random_weights(&mut rng, n);
        let spec = NetworkSpec {
            child_name: "X".into(),
            child_states: (0..=m).map(|l| format!("x{l}")).collect(),
            parents: weights
                .iter()
                .enumerate()
                .map(|(i, &w)| cptgen_core::ParentSpec {
                    name: format!("Y{i}"),
                    states: states.clone(),
                    weight: w,
                })
                .collect(),
        }
        .into_valid()
        .unwrap();
        let compat = CompatibilityMap::diagonal(&spec).unwrap();
        let anchors: Vec<_> = (0..k)
            .map(|s| {
                (
                    ParentalConfiguration::uniform(&spec, s).unwrap(),
                    Distribution::new(common::random_simplex(&mut rng, m + 1)).unwrap(),
                )
            })
            .collect();
        let set = AnchorSet::new(compat, anchors.clone()).unwrap();
        let result = generate_cpt(&spec, &set).unwrap();
        for (config, anchor) in &anchors {
            assert_eq!(result.cpt.row(config).unwrap(), anchor);
        }
    }
}
