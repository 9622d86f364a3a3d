mod common;

use std::collections::HashSet;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::Rng;

use dkpp::modeopt::exhaustive_cardinality_mode;
use dkpp::numeric::stream_rng;
use dkpp::{
    double_greedy, exhaustive_mode, gaussian_kernel, gibbs_step, greedy_mode, grid_points,
    inclusion_frequencies, random_greedy_cardinality, random_wishart_kernel, run_chain,
    ChainConfig, Dkpp, KernelMatrix, LogWeightTable, SpectralFunction, Subset,
};

fn uniform_model(n: usize) -> Dkpp {
    Dkpp::new(KernelMatrix::identity(n), SpectralFunction::affine(0.0, 0.0))
}

#[test]
fn uniform_target_flips_fair_coins() {
    let model = uniform_model(3);
    let mut rng = stream_rng(1, 0);
    let state = Subset::new(vec![0, 2]).unwrap();
    let trials = 20_000;
    let included = (0..trials)
        .filter(|_| gibbs_step(&model, &state, 1, &mut rng).unwrap().contains(1))
        .count();
    let freq = included as f64 / trials as f64;
    assert!((freq - 0.5).abs() < 0.015, "{freq}");
}

#[test]
fn duplicate_item_is_never_added_next_to_its_twin() {
    let l = KernelMatrix::from_rows(&[
        vec![1.0, 1.0, 0.2],
        vec![1.0, 1.0, 0.2],
        vec![0.2, 0.2, 1.0],
    ])
    .unwrap();
    let model = Dkpp::new(l, SpectralFunction::Log);
    let mut rng = stream_rng(2, 0);
    let state = Subset::new(vec![0]).unwrap();
    for _ in 0..1000 {
        let next = gibbs_step(&model, &state, 1, &mut rng).unwrap();
        assert_eq!(next, state);
    }
}

#[test]
fn heat_bath_transitions_match_the_conditional() {
    let n = 3;
    let model = Dkpp::new(random_wishart_kernel(n, 4), SpectralFunction::boxcox(0.5));
    let table = model.log_weight_table().unwrap();
    let mut rng = stream_rng(3, 0);
    // counts[base][i] = (visits, inclusions), base a mask without item i.
    let mut counts = vec![[(0usize, 0usize); 3]; 1 << n];
    let mut state = Subset::empty();
    for _ in 0..1_000_000 {
        let i = rng.random_range(0..n);
        let base = state.without(i).mask().unwrap() as usize;
        let next = gibbs_step(&table, &state, i, &mut rng).unwrap();
        counts[base][i].0 += 1;
        counts[base][i].1 += next.contains(i) as usize;
        // At most one item changes per step.
        assert!(next.difference(&state).len() + state.difference(&next).len() <= 1);
        state = next;
    }
    for base in 0..1usize << n {
        for i in (0..n).filter(|&i| base >> i & 1 == 0) {
            let (visits, hits) = counts[base][i];
            let gain = table.at((base | 1 << i) as u64) - table.at(base as u64);
            let p = common::sigmoid(gain);
            let sd = (p * (1.0 - p) / visits as f64).sqrt();
            let freq = hits as f64 / visits as f64;
            assert!((freq - p).abs() <= 3.0 * sd, "base {base} item {i}: {freq} vs {p}");
        }
    }
}

#[test]
fn uniform_chain_inclusion_rates() {
    let cfg = ChainConfig {
        sweeps: 50_000,
        burn_in: 0,
        thin: 1,
        seed: 5,
    };
    let chain = run_chain(&uniform_model(4), &Subset::empty(), &cfg).unwrap();
    assert_eq!(chain.states.len(), 50_000);
    assert!(chain.accepted <= chain.proposed);
    for f in inclusion_frequencies(&chain, 4).unwrap() {
        assert!((f - 0.5).abs() < 0.01, "{f}");
    }
}

#[test]
fn chains_are_reproducible() {
    let model = Dkpp::new(random_wishart_kernel(5, 6), SpectralFunction::boxcox(1.5));
    let cfg = ChainConfig {
        sweeps: 300,
        burn_in: 10,
        thin: 3,
        seed: 8,
    };
    let a = run_chain(&model, &Subset::empty(), &cfg).unwrap();
    let b = run_chain(&model, &Subset::empty(), &cfg).unwrap();
    assert_eq!(a, b);
    let c = run_chain(&model, &Subset::empty(), &ChainConfig { seed: 9, ..cfg }).unwrap();
    assert_ne!(a.states, c.states);
}

#[test]
fn long_chains_visit_every_state() {
    for lambda in [0.25, 1.0, 1.75] {
        let n = 6;
        let table = Dkpp::new(random_wishart_kernel(n, 7), SpectralFunction::boxcox(lambda))
            .log_weight_table()
            .unwrap();
        let cfg = ChainConfig {
            sweeps: 100_000,
            burn_in: 0,
            thin: 1,
            seed: 1,
        };
        let chain = run_chain(&table, &Subset::empty(), &cfg).unwrap();
        let seen: HashSet<u64> = chain.states.iter().map(|s| s.mask().unwrap()).collect();
        assert_eq!(seen.len(), 1 << n, "λ={lambda}");
    }
}

fn scores(l: &KernelMatrix, b: f64, c: f64) -> Vec<f64> {
    (0..l.dim()).map(|i| b * l.get(i, i) + c).collect()
}

#[test]
fn modular_objectives_select_positive_scores() {
    let l = random_wishart_kernel(9, 3);
    let (b, c) = (1.0, -1.0);
    let model = Dkpp::new(l.clone(), SpectralFunction::affine(b, c));
    let s = scores(&l, b, c);
    let want = Subset::from_unsorted((0..9).filter(|&i| s[i] > 0.0).collect()).unwrap();
    assert_eq!(exhaustive_mode(&model).unwrap().subset, want);
    assert_eq!(greedy_mode(&model).unwrap().subset, want);
    assert_eq!(double_greedy(&model, false, 0).unwrap().subset, want);
    assert_eq!(double_greedy(&model, true, 4).unwrap().subset, want);
}

#[test]
fn double_greedy_follows_the_hand_trace() {
    // f(∅)=0, f{0}=2, f{1}=1, f{0,1}=2.5, f{2}=-1, f{0,2}=0.5, f{1,2}=-0.5, f{0,1,2}=0
    let values = vec![0.0, 2.0, 1.0, 2.5, -1.0, 0.5, -0.5, 0.0];
    let f = LogWeightTable::from_values(3, values.clone()).unwrap();
    // i=0: a=2, b=-0.5, keep. i=1: a=0.5, b=0.5, keep. i=2: a=-2.5, b=2.5, drop.
    let r = double_greedy(&f, false, 0).unwrap();
    assert_eq!(r.subset, Subset::new(vec![0, 1]).unwrap());
    assert_eq!(r.objective, 2.5);

    // Shifting by -|A| moves every a by -1 and every b by +1.
    // i=0: a=1, b=0.5, keep. i=1: a=-0.5, b=1.5, drop. i=2: a=-2.5, b=2.5, drop.
    let shifted: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(m, v)| v - (m as u32).count_ones() as f64)
        .collect();
    let g = LogWeightTable::from_values(3, shifted).unwrap();
    let r = double_greedy(&g, false, 0).unwrap();
    assert_eq!(r.subset, Subset::new(vec![0]).unwrap());
    assert_eq!(r.objective, 1.0);
}

#[test]
fn double_greedy_meets_its_guarantee_after_shifting() {
    for seed in 0..20 {
        let model = Dkpp::new(random_wishart_kernel(10, 200 + seed), SpectralFunction::boxcox(0.5));
        let table = model.log_weight_table().unwrap();
        let min = table.values().iter().copied().fold(f64::INFINITY, f64::min);
        let best = exhaustive_mode(&table).unwrap();
        let dg = double_greedy(&table, false, 0).unwrap();
        assert!(dg.objective - min >= (best.objective - min) / 3.0 - 1e-9, "seed {seed}");
        assert!(best.objective >= dg.objective);
        assert!(best.objective >= greedy_mode(&table).unwrap().objective);
    }
}

#[test]
fn randomized_double_greedy_is_reproducible() {
    let model = Dkpp::new(random_wishart_kernel(10, 1), SpectralFunction::boxcox(0.5));
    let a = double_greedy(&model, true, 77).unwrap();
    let b = double_greedy(&model, true, 77).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.seed, Some(77));
}

#[test]
fn greedy_never_falls_below_the_empty_set() {
    for seed in 0..10 {
        let model = Dkpp::new(random_wishart_kernel(8, seed), SpectralFunction::boxcox(1.5));
        assert!(greedy_mode(&model).unwrap().objective >= 0.0);
    }
}

#[test]
fn random_greedy_full_cardinality_returns_everything() {
    let model = Dkpp::new(random_wishart_kernel(6, 2), SpectralFunction::boxcox(0.5));
    assert_eq!(
        random_greedy_cardinality(&model, 6, 3).unwrap().subset,
        Subset::full(6)
    );
    assert!(random_greedy_cardinality(&model, 0, 3).is_err());
    assert!(random_greedy_cardinality(&model, 7, 3).is_err());
}

#[test]
fn random_greedy_on_modular_objectives_is_near_optimal_on_average() {
    let n = 10;
    let model = Dkpp::new(random_wishart_kernel(n, 12), SpectralFunction::affine(1.0, 0.0));
    for k in [2, 4, 7] {
        let best = exhaustive_cardinality_mode(&model, k).unwrap().objective;
        let mean = (0..200)
            .map(|s| random_greedy_cardinality(&model, k, s).unwrap().objective)
            .sum::<f64>()
            / 200.0;
        assert!(mean >= (1.0 - (-1.0f64).exp()) * best, "k={k}: {mean} vs {best}");
    }
}

#[test]
fn random_greedy_spreads_points_on_a_grid() {
    let side = 6;
    let points = grid_points(side);
    let model = Dkpp::new(gaussian_kernel(&points, 1.0).unwrap(), SpectralFunction::Log);
    let spread = (0..100)
        .filter(|&seed| {
            let a = random_greedy_cardinality(&model, 4, seed).unwrap().subset;
            let items = a.items();
            items.iter().enumerate().all(|(s, &i)| {
                items[s + 1..].iter().all(|&j| {
                    let (ri, ci) = (i / side, i % side);
                    let (rj, cj) = (j / side, j % side);
                    ri.abs_diff(rj) + ci.abs_diff(cj) > 1
                })
            })
        })
        .count();
    assert!(spread >= 90, "{spread}/100");
}

#[test]
fn exhaustive_cardinality_mode_matches_brute_force() {
    let table = Dkpp::new(random_wishart_kernel(8, 3), SpectralFunction::boxcox(1.5))
        .log_weight_table()
        .unwrap();
    for k in 0..=8 {
        let r = exhaustive_cardinality_mode(&table, k).unwrap();
        let best = (0..256u64)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| table.at(m))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(r.objective, best, epsilon = 1e-12);
        assert_eq!(r.subset.len(), k);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn optimizer_objectives_are_fresh(seed in 0u64..1000, k in 1usize..=7, lambda in 0.0f64..2.0) {
        let model = Dkpp::new(random_wishart_kernel(7, seed), SpectralFunction::boxcox(lambda));
        let results = [
            exhaustive_mode(&model).unwrap(),
            greedy_mode(&model).unwrap(),
            double_greedy(&model, false, seed).unwrap(),
            double_greedy(&model, true, seed).unwrap(),
            random_greedy_cardinality(&model, k, seed).unwrap(),
        ];
        for r in &results {
            prop_assert_eq!(r.objective, model.unnorm_logprob(&r.subset).unwrap());
        }
        let rg = &results[4].subset;
        prop_assert_eq!(rg.len(), k);
        prop_assert!(rg.items().windows(2).all(|w| w[0] < w[1]));
    }
}
