//! Exact Potts and random-cluster measures by enumeration, and the exact
//! pushforward of the conditioned random-cluster measure through cluster
//! colouring.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{Color, ModelParams, System, BLUE, RED};
use crate::par;
use crate::potts_sampler::SpinConfig;

use super::graph::FkGraph;

pub const ENUMERATION_CAP: f64 = 1e8;

#[derive(Clone, Debug)]
enum States {
    Potts {
        system: Arc<System>,
        q: u8,
        /// Interior sites enumerated; the others keep their colour in `base`.
        free: Vec<usize>,
        base: Vec<Color>,
    },
    Fk(FkGraph),
}

/// Enumerated states with strictly positive unnormalised weights.
#[derive(Clone, Debug)]
pub struct ExactMeasure {
    states: States,
    codes: Vec<u64>,
    weights: Vec<f64>,
    z: f64,
}

impl ExactMeasure {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn code(&self, i: usize) -> u64 {
        self.codes[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.weights[i] / self.z
    }

    /// Sum of all probabilities; 1 up to rounding.
    pub fn total_probability(&self) -> f64 {
        self.weights.iter().map(|w| w / self.z).sum()
    }

    /// Full colouring of state `i` for a Potts measure.
    pub fn colors(&self, i: usize) -> Option<Vec<Color>> {
        match &self.states {
            States::Potts { q, free, base, .. } => {
                let mut c = base.clone();
                let mut code = self.codes[i];
                for &v in free {
                    c[v] = (code % *q as u64) as Color + 1;
                    code /= *q as u64;
                }
                Some(c)
            }
            States::Fk(_) => None,
        }
    }

    pub fn config(&self, i: usize) -> Option<SpinConfig> {
        let system = match &self.states {
            States::Potts { system, .. } => system.clone(),
            States::Fk(_) => return None,
        };
        SpinConfig::from_colors(system, self.colors(i)?).ok()
    }

    /// Bond mask of state `i` for a random-cluster measure.
    pub fn fk_mask(&self, i: usize) -> Option<u64> {
        matches!(self.states, States::Fk(_)).then(|| self.codes[i])
    }

    pub fn graph(&self) -> Option<&FkGraph> {
        match &self.states {
            States::Fk(g) => Some(g),
            States::Potts { .. } => None,
        }
    }

    /// Probability of the states whose index satisfies `pred`.
    pub fn probability_by_index(&self, pred: impl Fn(usize) -> bool) -> f64 {
        (0..self.len()).filter(|&i| pred(i)).map(|i| self.weights[i]).sum::<f64>() / self.z
    }

    /// Probability of a Potts event.
    pub fn probability(&self, event: impl Fn(&SpinConfig) -> bool) -> f64 {
        self.probability_by_index(|i| self.config(i).is_some_and(|s| event(&s)))
    }

    /// `P(a | b)`; `None` when `P(b) = 0`.
    pub fn conditional(&self, a: impl Fn(&SpinConfig) -> bool, b: impl Fn(&SpinConfig) -> bool) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.len() {
            let Some(s) = self.config(i) else { continue };
            if b(&s) {
                den += self.weights[i];
                if a(&s) {
                    num += self.weights[i];
                }
            }
        }
        (den > 0.0).then(|| num / den)
    }

    /// The measure restricted to an event and renormalised.
    pub fn condition(&self, event: impl Fn(&SpinConfig) -> bool) -> Result<ExactMeasure> {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.config(i).is_some_and(|s| event(&s)))
            .collect();
        if keep.is_empty() {
            return Err(Error::Precondition("conditioning on a null event".into()));
        }
        let codes: Vec<u64> = keep.iter().map(|&i| self.codes[i]).collect();
        let weights: Vec<f64> = keep.iter().map(|&i| self.weights[i]).collect();
        let z = weights.iter().sum();
        Ok(ExactMeasure {
            states: self.states.clone(),
            codes,
            weights,
            z,
        })
    }

    /// Probability of every full colouring, keyed by its base-q code over all interior sites.
    pub fn potts_law(&self) -> HashMap<u64, f64> {
        let mut law = HashMap::new();
        if let States::Potts { q, .. } = &self.states {
            for i in 0..self.len() {
                let c = self.colors(i).expect("potts state");
                *law.entry(coloring_code(&c, *q)).or_insert(0.0) += self.prob(i);
            }
        }
        law
    }
}

/// Base-q code of a full colouring, first site least significant.
pub fn coloring_code(colors: &[Color], q: u8) -> u64 {
    colors.iter().rev().fold(0u64, |acc, &c| acc * q as u64 + (c - 1) as u64)
}

/// Number of bichromatic edges of a colouring, boundary included.
fn bichromatic(system: &System, colors: &[Color]) -> u32 {
    let d = system.domain();
    let n_int = d.n_interior();
    let color = |x: u32| {
        let x = x as usize;
        if x < n_int {
            colors[x]
        } else {
            system.boundary_color_at(x - n_int)
        }
    };
    d.edges().iter().filter(|e| color(e.lo) != color(e.hi)).count() as u32
}

/// Exact Potts measure with the system's boundary colours.
pub fn enumerate_potts(system: &Arc<System>, params: &ModelParams) -> Result<ExactMeasure> {
    enumerate_potts_pinned(system, params, &[])
}

/// Exact Potts measure with some interior sites held at fixed colours.
pub fn enumerate_potts_pinned(system: &Arc<System>, params: &ModelParams, pinned: &[(usize, Color)]) -> Result<ExactMeasure> {
    let n_int = system.domain().n_interior();
    let q = params.q;
    let mut base = vec![RED; n_int];
    for &(v, c) in pinned {
        if v >= n_int || c == 0 || c > q {
            return Err(Error::Param(format!("invalid pin ({v}, {c})")));
        }
        base[v] = c;
    }
    let free: Vec<usize> = (0..n_int).filter(|v| !pinned.iter().any(|p| p.0 == *v)).collect();
    let states = (q as f64).powi(free.len() as i32);
    if states > ENUMERATION_CAP {
        return Err(Error::TooLarge { states, cap: ENUMERATION_CAP });
    }
    let total = states as u64;
    let boltz: Vec<f64> = (0..=d_edges(system)).map(|k| (-params.beta * k as f64).exp()).collect();
    let chunks = par::ranges(total, 64);
    let parts: Vec<Vec<f64>> = par::map_indexed(chunks.len(), |c| {
        let mut colors = base.clone();
        chunks[c]
            .clone()
            .map(|code| {
                let mut x = code;
                for &v in &free {
                    colors[v] = (x % q as u64) as Color + 1;
                    x /= q as u64;
                }
                boltz[bichromatic(system, &colors) as usize]
            })
            .collect()
    });
    let weights: Vec<f64> = parts.into_iter().flatten().collect();
    let z = weights.iter().sum();
    Ok(ExactMeasure {
        states: States::Potts {
            system: system.clone(),
            q,
            free,
            base,
        },
        codes: (0..total).collect(),
        weights,
        z,
    })
}

fn d_edges(system: &System) -> usize {
    system.domain().n_edges()
}

fn check_fk_size(graph: &FkGraph) -> Result<()> {
    let states = graph.state_count();
    if states > ENUMERATION_CAP || graph.n_bonds() > 63 {
        return Err(Error::TooLarge { states, cap: ENUMERATION_CAP });
    }
    Ok(())
}

/// Exact random-cluster measure on an explicit graph; marked bonds use odds `t`.
pub fn enumerate_fk_graph(graph: &FkGraph, t: f64) -> Result<ExactMeasure> {
    check_fk_size(graph)?;
    let total = 1u64 << graph.n_bonds();
    let chunks = par::ranges(total, 64);
    let parts: Vec<Vec<(u64, f64)>> = par::map_indexed(chunks.len(), |c| {
        let mut uf = graph.union_find();
        chunks[c]
            .clone()
            .filter_map(|mask| {
                let w = graph.weight(mask, t, &mut uf);
                (w > 0.0).then_some((mask, w))
            })
            .collect()
    });
    let (codes, weights): (Vec<u64>, Vec<f64>) = parts.into_iter().flatten().unzip();
    let z = weights.iter().sum();
    Ok(ExactMeasure {
        states: States::Fk(graph.clone()),
        codes,
        weights,
        z,
    })
}

/// Exact random-cluster measure of a system with wired colour classes,
/// optionally conditioned on the classes staying disconnected.
pub fn enumerate_fk(system: &System, params: &ModelParams, lumped: bool, conditioned: bool) -> Result<ExactMeasure> {
    enumerate_fk_graph(&FkGraph::from_system(system, params, lumped, conditioned), f64::NAN)
}

/// Potts law obtained by colouring the clusters of the conditioned
/// random-cluster measure: class 0 red, class 1 blue, others uniformly.
/// Keys are full-colouring codes as in [`coloring_code`].
pub fn coupling_pushforward(system: &System, params: &ModelParams) -> Result<HashMap<u64, f64>> {
    let graph = FkGraph::from_system(system, params, true, true);
    check_fk_size(&graph)?;
    let total = 1u64 << graph.n_bonds();
    let chunks = par::ranges(total, 64);
    let parts: Vec<HashMap<Vec<u8>, f64>> = par::map_indexed(chunks.len(), |c| {
        let mut uf = graph.union_find();
        let mut sig = Vec::with_capacity(graph.n_vertices);
        let mut acc: HashMap<Vec<u8>, f64> = HashMap::new();
        for mask in chunks[c].clone() {
            if graph.clusters(mask, &mut uf).is_none() {
                continue;
            }
            graph.signature(&mut uf, &mut sig);
            *acc.entry(sig.clone()).or_insert(0.0) += graph.bond_weight(mask).0;
        }
        acc
    });
    let mut by_sig: HashMap<Vec<u8>, f64> = HashMap::new();
    let mut order: Vec<Vec<u8>> = Vec::new();
    for part in parts {
        let mut keys: Vec<_> = part.into_iter().collect();
        keys.sort_by(|a, b| a.0.cmp(&b.0));
        for (k, w) in keys {
            match by_sig.get_mut(&k) {
                Some(x) => *x += w,
                None => {
                    order.push(k.clone());
                    by_sig.insert(k, w);
                }
            }
        }
    }
    let q = params.q;
    let class_color = |l: u8| if l == 0 { RED } else { BLUE };
    let mut law: HashMap<u64, f64> = HashMap::new();
    let mut z = 0.0;
    for sig in &order {
        let w = by_sig[sig];
        let n_free = sig.iter().copied().filter(|&l| l >= 2).max().map_or(0, |m| (m - 1) as usize);
        z += w * (q as f64).powi(n_free as i32);
        let mut assign = vec![1u8; n_free];
        loop {
            let colors: Vec<Color> = sig
                .iter()
                .map(|&l| if l < 2 { class_color(l) } else { assign[(l - 2) as usize] })
                .collect();
            *law.entry(coloring_code(&colors, q)).or_insert(0.0) += w;
            if !crate::fuzzy::next_coloring(&mut assign, q) {
                break;
            }
        }
    }
    for p in law.values_mut() {
        *p /= z;
    }
    Ok(law)
}

/// Total variation distance between two laws on the same code space.
pub fn total_variation(a: &HashMap<u64, f64>, b: &HashMap<u64, f64>) -> f64 {
    let mut tv = 0.0;
    for (k, &p) in a {
        tv += (p - b.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &p) in b {
        if !a.contains_key(k) {
            tv += p;
        }
    }
    tv / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoundaryCondition, DomainKind};

    #[test]
    fn single_site_all_blue() {
        let sys = System::build(DomainKind::FloorBox, 2, 1, BoundaryCondition::Split { h: 1 }).unwrap();
        let p = ModelParams::new(2, 0.9).unwrap();
        let m = enumerate_potts_pinned(&sys, &p, &[(1, BLUE), (2, BLUE), (3, BLUE)]).unwrap();
        assert_eq!(m.len(), 2);
        let pb = m.probability(|s| s.color(0) == BLUE);
        assert!((pb - 1.0 / (1.0 + (-4.0 * 0.9f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn beta_zero_is_uniform() {
        let sys = System::build(DomainKind::FloorBox, 2, 1, BoundaryCondition::Floor).unwrap();
        let m = enumerate_potts(&sys, &ModelParams::new(3, 0.0).unwrap()).unwrap();
        assert_eq!(m.len(), 81);
        assert!((0..m.len()).all(|i| (m.prob(i) - 1.0 / 81.0).abs() < 1e-15));
    }

    #[test]
    fn single_edge_fk() {
        let mut g = FkGraph::new(2, 0, 2.0, false);
        g.add_bond(0, super::super::graph::End::Vertex(1), 1.0);
        let m = enumerate_fk_graph(&g, f64::NAN).unwrap();
        let open = m.probability_by_index(|i| m.fk_mask(i) == Some(1));
        assert!((open - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn conditioned_fk_excludes_crossings() {
        let sys = System::build(DomainKind::FloorBox, 2, 1, BoundaryCondition::Floor).unwrap();
        let p = ModelParams::new(2, 1.0).unwrap();
        let m = enumerate_fk(&sys, &p, true, true).unwrap();
        let g = m.graph().unwrap().clone();
        let mut uf = g.union_find();
        for i in 0..m.len() {
            g.clusters(m.fk_mask(i).unwrap(), &mut uf).unwrap();
            assert!(!uf.same(g.n_vertices, g.n_vertices + 1));
        }
        assert!((m.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coupling_reproduces_potts() {
        let sys = System::build(DomainKind::FloorBox, 2, 1, BoundaryCondition::Floor).unwrap();
        for q in [2, 3] {
            let p = ModelParams::new(q, 0.7).unwrap();
            let push = coupling_pushforward(&sys, &p).unwrap();
            let exact = enumerate_potts(&sys, &p).unwrap().potts_law();
            assert!(total_variation(&push, &exact) < 1e-12);
        }
    }

    #[test]
    fn lumped_and_raw_agree() {
        let sys = System::build(DomainKind::FloorBox, 2, 1, BoundaryCondition::Floor).unwrap();
        let p = ModelParams::new(3, 1.1).unwrap();
        let raw = enumerate_fk(&sys, &p, false, true).unwrap();
        let lumped = enumerate_fk(&sys, &p, true, true).unwrap();
        assert!((raw.z() / lumped.z() - 1.0).abs() < 1e-12);
    }
}
