use std::collections::HashMap;
use std::sync::Arc;

use pfsim::interfaces::blue_above_floor;
use pfsim::lattice::{BoundaryCondition, DomainKind, ModelParams, System, BLUE, RED};
use pfsim::oracle::exact::{coloring_code, enumerate_potts, total_variation, ExactMeasure};
use pfsim::potts_sampler::{sample_conditional_soft_floor, Algorithm, ChainState, ConditionalMethod, Schedule, SpinConfig};
use pfsim::rates::point_to_plane_counts;
use pfsim::rc_coupling::{cluster_labeling, color_spins_from_edges, couple_edges_from_spins, EdgeConfig, UnionFind};
use pfsim::stats::McEstimate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn marginals(sys: &Arc<System>, params: &ModelParams, alg: Algorithm, sweeps: usize, seed: u64, color: u8) -> Vec<McEstimate> {
    let n = sys.domain().n_interior();
    let mut chain = ChainState::new(SpinConfig::uniform(sys.clone(), RED), seed);
    chain.run(alg, params, 200);
    let mut series = vec![Vec::with_capacity(sweeps); n];
    for _ in 0..sweeps {
        chain.step(alg, params);
        for (v, s) in series.iter_mut().enumerate() {
            s.push(f64::from(u8::from(chain.config.color(v) == color)));
        }
    }
    series.iter().map(|s| McEstimate::from_series(s)).collect()
}

fn assert_marginals(exact: &ExactMeasure, est: &[McEstimate], color: u8, k: f64) {
    for (v, e) in est.iter().enumerate() {
        let p = exact.probability(|s| s.color(v) == color);
        assert!(
            (e.mean - p).abs() <= k * e.stderr + 1e-9,
            "site {v}: MC {} ± {} vs exact {p}",
            e.mean,
            e.stderr
        );
    }
}

#[test]
fn heat_bath_marginals_on_floor_box() {
    let sys = System::build(DomainKind::FloorBox, 2, 2, BoundaryCondition::Floor).unwrap();
    let params = ModelParams::new(2, 0.7).unwrap();
    let exact = enumerate_potts(&sys, &params).unwrap();
    let est = marginals(&sys, &params, Algorithm::HeatBath, 20_000, 11, BLUE);
    assert_marginals(&exact, &est[..1], BLUE, 3.0);
    assert_marginals(&exact, &est, BLUE, 4.0);
}

#[test]
fn alternating_marginals_on_split_slab_q3() {
    let sys = System::build(DomainKind::SlabBox, 2, 1, BoundaryCondition::dobrushin()).unwrap();
    let params = ModelParams::new(3, 1.0).unwrap();
    let exact = enumerate_potts(&sys, &params).unwrap();
    let est = marginals(&sys, &params, Algorithm::Alternating, 20_000, 12, BLUE);
    assert_marginals(&exact, &est, BLUE, 4.0);
    let est = marginals(&sys, &params, Algorithm::SwendsenWang, 20_000, 13, 3);
    assert_marginals(&exact, &est, 3, 4.0);
}

#[test]
fn soft_floor_conditional_marginal() {
    let sys = System::build(DomainKind::SlabBox, 2, 1, BoundaryCondition::Split { h: 0 }).unwrap();
    let params = ModelParams::new(2, 1.0).unwrap();
    let cond = enumerate_potts(&sys, &params).unwrap().condition(blue_above_floor).unwrap();
    let o = 4;
    let exact = cond.probability(|s| s.color(o) == BLUE);
    let schedule = Schedule { burnin: 100, interval: 1 };
    let mut means = Vec::new();
    for method in [ConditionalMethod::Rejection, ConditionalMethod::Restricted] {
        let run = sample_conditional_soft_floor(sys.clone(), &params, 20_000, 21, method, schedule, 1_000_000).unwrap();
        assert!(run.samples.iter().all(blue_above_floor));
        let xs: Vec<f64> = run.samples.iter().map(|s| f64::from(u8::from(s.color(o) == BLUE))).collect();
        let e = McEstimate::from_series(&xs);
        assert!((e.mean - exact).abs() <= 3.0 * e.stderr, "{method:?}: {} ± {} vs {exact}", e.mean, e.stderr);
        means.push(e);
    }
    let se = means[0].stderr.hypot(means[1].stderr);
    assert!((means[0].mean - means[1].mean).abs() <= 3.0 * se);
}

/// Draws from an exact measure by inverse CDF.
fn exact_sampler(m: &ExactMeasure) -> impl Fn(&mut ChaCha8Rng) -> SpinConfig + '_ {
    let mut cdf = Vec::with_capacity(m.len());
    let mut acc = 0.0;
    for i in 0..m.len() {
        acc += m.prob(i);
        cdf.push(acc);
    }
    move |rng| {
        let u = rng.gen::<f64>() * acc;
        let i = cdf.partition_point(|&c| c < u).min(m.len() - 1);
        m.config(i).unwrap()
    }
}

#[test]
fn color_edges_color_round_trip_preserves_potts_law() {
    let sys = System::build(DomainKind::FloorBox, 2, 1, BoundaryCondition::Floor).unwrap();
    let params = ModelParams::new(2, 1.2).unwrap();
    let exact = enumerate_potts(&sys, &params).unwrap();
    let draw = exact_sampler(&exact);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 100_000;
    let mut counts: HashMap<u64, f64> = HashMap::new();
    for _ in 0..draws {
        let sigma = draw(&mut rng);
        let omega = couple_edges_from_spins(&sigma, &params, &mut rng);
        let back = color_spins_from_edges(&omega, &params, &mut rng).unwrap();
        *counts.entry(coloring_code(back.colors(), 2)).or_default() += 1.0 / draws as f64;
    }
    let tv = total_variation(&counts, &exact.potts_law());
    assert!(tv < 0.02, "TV {tv}");
}

#[test]
fn cluster_labels_match_breadth_first_search() {
    let sys = System::build(DomainKind::FloorBox, 2, 2, BoundaryCondition::Floor).unwrap();
    let d = sys.domain();
    let n_int = d.n_interior();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let bits: Vec<bool> = (0..d.n_edges()).map(|_| rng.gen_bool(0.5)).collect();
        let omega = EdgeConfig::from_bits(sys.clone(), bits.clone()).unwrap();
        let lab = cluster_labeling(&omega);
        // independent connectivity: union-find over interior sites and boundary classes
        let node = |ext: usize| if ext < n_int { ext } else { n_int + sys.class_of(ext - n_int) as usize };
        let mut uf = UnionFind::new(n_int + sys.n_classes());
        for (e, ed) in d.edges().iter().enumerate() {
            if bits[e] {
                uf.union(node(ed.lo as usize), node(ed.hi as usize));
            }
        }
        for u in 0..n_int {
            for v in 0..n_int {
                assert_eq!(lab.labels[u] == lab.labels[v], uf.same(u, v));
            }
        }
    }
}

#[test]
fn zero_height_rate_matches_exact_nonred_probability() {
    let sys = System::build(DomainKind::FloorBox, 2, 2, BoundaryCondition::RedAll).unwrap();
    let params = ModelParams::new(2, 1.0).unwrap();
    let exact = enumerate_potts(&sys, &params).unwrap();
    let n = sys.domain().n_interior();
    let p: f64 = (0..n).map(|v| exact.probability(|s| s.color(v) != RED)).sum::<f64>() / n as f64;
    let mut chain = ChainState::new(SpinConfig::uniform(sys.clone(), RED), 3);
    chain.run(Algorithm::HeatBath, &params, 100);
    let xs: Vec<f64> = (0..40_000)
        .map(|_| {
            chain.step(Algorithm::HeatBath, &params);
            let c = point_to_plane_counts(&chain.config, 0, 0);
            c.hits[0] as f64 / c.origins as f64
        })
        .collect();
    let e = McEstimate::from_series(&xs);
    assert!((e.mean - p).abs() <= 3.0 * e.stderr, "MC {} ± {} vs exact {p}", e.mean, e.stderr);
}
