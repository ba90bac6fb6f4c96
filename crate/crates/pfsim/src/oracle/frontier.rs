//! Random-cluster partition functions by frontier dynamic programming.
//! Vertices are added one at a time; the state records the connectivity of
//! the vertices that still have unprocessed bonds. Weights are polynomials
//! in the odds of the marked bonds.

use rustc_hash::FxHashMap as StateMap;

use crate::error::{Error, Result};

use super::graph::{End, FkGraph};

const RED_CLASS: u8 = 0;
const BLUE_CLASS: u8 = 1;
const FREE: u8 = 2;

const MAX_WIDTH: usize = 32;

/// Fixed-capacity label list; unused slots stay zero so comparisons are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Labels {
    buf: [u8; MAX_WIDTH],
    len: u8,
}

impl Labels {
    fn push(&mut self, l: u8) {
        self.buf[self.len as usize] = l;
        self.len += 1;
    }

    fn remove(&mut self, i: usize) -> u8 {
        let l = self.buf[i];
        let n = self.len as usize;
        self.buf.copy_within(i + 1..n, i);
        self.buf[n - 1] = 0;
        self.len -= 1;
        l
    }

    fn contains(&self, l: &u8) -> bool {
        self.buf[..self.len as usize].contains(l)
    }

    fn iter_mut(&mut self) -> std::slice::IterMut<'_, u8> {
        self.buf[..self.len as usize].iter_mut()
    }
}

impl std::ops::Index<usize> for Labels {
    type Output = u8;
    fn index(&self, i: usize) -> &u8 {
        &self.buf[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct State {
    labels: Labels,
    /// Free clusters that must end up in the red class, by label − 2.
    flags: u64,
    merged: bool,
}

/// Coefficients `c_k`: total weight of configurations with `k` open marked
/// bonds, with marked odds set to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    /// `Σ c_k t^k`.
    pub fn eval_odds(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// `Σ c_k θ^k (1−θ)^{m−k}` with `m` the number of marked bonds.
    pub fn eval_prob(&self, theta: f64) -> f64 {
        let m = self.0.len() as i32 - 1;
        self.0
            .iter()
            .enumerate()
            .map(|(k, c)| c * theta.powi(k as i32) * (1.0 - theta).powi(m - k as i32))
            .sum()
    }

    /// Expected number of open marked bonds at marked-bond probability `θ`.
    pub fn mean_open(&self, theta: f64) -> f64 {
        let m = self.0.len() as i32 - 1;
        let (mut num, mut den) = (0.0, 0.0);
        for (k, c) in self.0.iter().enumerate() {
            let w = c * theta.powi(k as i32) * (1.0 - theta).powi(m - k as i32);
            num += k as f64 * w;
            den += w;
        }
        num / den
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Constraints on top of the graph's own conditioning.
#[derive(Clone, Debug, Default)]
pub struct Constraints {
    /// Vertices that must lie in the cluster of the red class.
    pub must_red: Vec<bool>,
}

/// Largest number of simultaneous states seen, for diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FrontierStats {
    pub max_states: usize,
    pub max_width: usize,
}

/// Partition function of `graph` processed in `order`; `None` uses index order.
pub fn partition_polynomial(graph: &FkGraph, constraints: &Constraints, order: Option<&[usize]>) -> Result<(Polynomial, FrontierStats)> {
    let nv = graph.n_vertices;
    let order: Vec<usize> = order.map_or_else(|| (0..nv).collect(), |o| o.to_vec());
    let mut pos = vec![usize::MAX; nv];
    for (step, &v) in order.iter().enumerate() {
        if v >= nv || pos[v] != usize::MAX {
            return Err(Error::Param("processing order is not a permutation".into()));
        }
        pos[v] = step;
    }
    if order.len() != nv {
        return Err(Error::Param("processing order is not a permutation".into()));
    }
    let must_red = |v: usize| constraints.must_red.get(v).copied().unwrap_or(false);
    if (0..nv).any(must_red) && !(graph.conditioned && graph.n_classes == 2) {
        return Err(Error::Param("red constraints need a conditioned two-class graph".into()));
    }
    if graph.n_classes > 2 {
        return Err(Error::Param("at most two boundary classes".into()));
    }

    // bonds handled when their later endpoint is added
    let mut at_step: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut last_use: Vec<usize> = pos.clone();
    for (b, bond) in graph.bonds.iter().enumerate() {
        match bond.b {
            End::Vertex(u) => {
                let (early, late) = if pos[u] < pos[bond.a] { (u, bond.a) } else { (bond.a, u) };
                at_step[pos[late]].push(b);
                last_use[early] = last_use[early].max(pos[late]);
            }
            End::Class(_) => at_step[pos[bond.a]].push(b),
        }
    }

    let degree = graph.n_tilde();
    let q = graph.q;
    let mut active: Vec<usize> = Vec::new();
    let mut states: StateMap<State, Vec<f64>> = StateMap::default();
    let mut init = vec![0.0; degree + 1];
    init[0] = 1.0;
    states.insert(
        State {
            labels: Labels {
                buf: [0; MAX_WIDTH],
                len: 0,
            },
            flags: 0,
            merged: false,
        },
        init,
    );
    let mut stats = FrontierStats::default();

    for (step, &v) in order.iter().enumerate() {
        active.push(v);
        if active.len() > MAX_WIDTH {
            return Err(Error::TooLarge {
                states: active.len() as f64,
                cap: MAX_WIDTH as f64,
            });
        }
        stats.max_width = stats.max_width.max(active.len());
        let slot = active.len() - 1;
        let mut next: StateMap<State, Vec<f64>> = StateMap::default();
        for (mut s, w) in std::mem::take(&mut states) {
            let label = FREE + n_free(&s.labels);
            if label as usize - FREE as usize >= 64 {
                return Err(Error::TooLarge { states: label as f64, cap: 64.0 });
            }
            s.labels.push(label);
            if must_red(v) {
                s.flags |= 1 << (label - FREE);
            }
            next.insert(s, w);
        }
        states = next;

        for &b in &at_step[step] {
            let bond = &graph.bonds[b];
            let mut next: StateMap<State, Vec<f64>> = StateMap::default();
            for (s, w) in std::mem::take(&mut states) {
                let x = s.labels[slot];
                let y = match bond.b {
                    End::Vertex(u) => {
                        let other = if u == v { bond.a } else { u };
                        s.labels[active.iter().position(|&a| a == other).expect("earlier endpoint active")]
                    }
                    End::Class(c) if s.merged && c == BLUE_CLASS => RED_CLASS,
                    End::Class(c) => c,
                };
                if let Some(opened) = join(&s, x, y, graph.conditioned) {
                    let ow = if bond.tilde {
                        let mut shifted = vec![0.0; degree + 1];
                        shifted[1..].copy_from_slice(&w[..degree]);
                        shifted
                    } else {
                        w.iter().map(|c| c * bond.odds).collect()
                    };
                    accumulate(&mut next, canonical(opened), ow);
                }
                accumulate(&mut next, s, w);
            }
            states = next;
        }

        // retire vertices with no bonds left
        let mut retire: Vec<usize> = (0..active.len()).filter(|&i| last_use[active[i]] <= step).collect();
        retire.reverse();
        if !retire.is_empty() {
            let mut next: StateMap<State, Vec<f64>> = StateMap::default();
            for (mut s, mut w) in std::mem::take(&mut states) {
                let mut alive = true;
                for &i in &retire {
                    let l = s.labels.remove(i);
                    if l >= FREE && !s.labels.contains(&l) {
                        if s.flags >> (l - FREE) & 1 == 1 {
                            alive = false;
                            break;
                        }
                        s.flags &= !(1 << (l - FREE));
                        w.iter_mut().for_each(|c| *c *= q);
                    }
                }
                if alive {
                    accumulate(&mut next, canonical(s), w);
                }
            }
            states = next;
            for &i in &retire {
                active.remove(i);
            }
        }
        stats.max_states = stats.max_states.max(states.len());
    }

    let mut total = vec![0.0; degree + 1];
    for (s, w) in states {
        let classes = graph.n_classes - usize::from(s.merged);
        let f = q.powi(classes as i32);
        for (t, c) in total.iter_mut().zip(w) {
            *t += c * f;
        }
    }
    Ok((Polynomial(total), stats))
}

fn n_free(labels: &Labels) -> u8 {
    labels.buf[..labels.len as usize].iter().filter(|&&l| l >= FREE).map(|&l| l - FREE + 1).max().unwrap_or(0)
}

fn accumulate(map: &mut StateMap<State, Vec<f64>>, s: State, w: Vec<f64>) {
    match map.get_mut(&s) {
        Some(acc) => acc.iter_mut().zip(w).for_each(|(a, b)| *a += b),
        None => {
            map.insert(s, w);
        }
    }
}

/// State after joining the clusters labelled `x` and `y`; `None` if forbidden.
fn join(s: &State, x: u8, y: u8, conditioned: bool) -> Option<State> {
    if x == y {
        return Some(*s);
    }
    let (keep, drop) = if x.min(y) < FREE { (x.min(y), x.max(y)) } else { (x, y) };
    let mut t = *s;
    if keep < FREE && drop < FREE {
        if conditioned {
            return None;
        }
        t.merged = true;
    } else if keep < FREE {
        let flagged = t.flags >> (drop - FREE) & 1 == 1;
        if flagged && keep == BLUE_CLASS {
            return None;
        }
        t.flags &= !(1 << (drop - FREE));
    } else if t.flags >> (drop - FREE) & 1 == 1 {
        t.flags = (t.flags & !(1 << (drop - FREE))) | 1 << (keep - FREE);
    }
    for l in t.labels.iter_mut() {
        if *l == drop {
            *l = keep;
        }
    }
    Some(t)
}

/// Relabels free clusters 2, 3, … in order of first appearance.
fn canonical(mut s: State) -> State {
    let mut map: Vec<(u8, u8)> = Vec::new();
    let mut flags = 0u64;
    for l in s.labels.iter_mut() {
        if *l < FREE {
            continue;
        }
        let new = match map.iter().find(|(old, _)| old == l) {
            Some(&(_, n)) => n,
            None => {
                let n = FREE + map.len() as u8;
                map.push((*l, n));
                if s.flags >> (*l - FREE) & 1 == 1 {
                    flags |= 1 << (n - FREE);
                }
                n
            }
        };
        *l = new;
    }
    s.flags = flags;
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoundaryCondition, DomainKind, ModelParams, System};
    use crate::oracle::exact::enumerate_fk_graph;

    fn brute_polynomial(g: &FkGraph) -> Vec<f64> {
        let mut c = vec![0.0; g.n_tilde() + 1];
        let mut uf = g.union_find();
        for mask in 0..1u64 << g.n_bonds() {
            let w = g.weight(mask, 1.0, &mut uf);
            c[g.bond_weight(mask).1] += w;
        }
        c
    }

    #[test]
    fn matches_enumeration_on_boxes() {
        for (kind, m, bc, q, cond) in [
            (DomainKind::FloorBox, 1, BoundaryCondition::Floor, 2, true),
            (DomainKind::FloorBox, 2, BoundaryCondition::Floor, 3, true),
            (DomainKind::FloorBox, 2, BoundaryCondition::Floor, 2, false),
            (DomainKind::SlabBox, 1, BoundaryCondition::dobrushin(), 2, true),
        ] {
            let sys = System::build(kind, 2, m, bc).unwrap();
            let p = ModelParams::new(q, 0.9).unwrap();
            let g = FkGraph::from_system(&sys, &p, true, cond);
            let brute = enumerate_fk_graph(&g, f64::NAN).unwrap().z();
            let (poly, _) = partition_polynomial(&g, &Constraints::default(), None).unwrap();
            assert!((poly.total() / brute - 1.0).abs() < 1e-10, "{kind:?} {m} {q} {cond}");
            let rev: Vec<usize> = (0..g.n_vertices).rev().collect();
            let (poly2, _) = partition_polynomial(&g, &Constraints::default(), Some(&rev)).unwrap();
            assert!((poly2.total() / poly.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tilde_coefficients_and_red_constraint() {
        let sys = System::build(DomainKind::FloorBox, 2, 1, BoundaryCondition::Floor).unwrap();
        let p = ModelParams::new(2, 0.7).unwrap();
        let mut g = FkGraph::from_system(&sys, &p, true, true);
        g.add_tilde_bond(0, End::Class(1));
        g.add_tilde_bond(3, End::Class(1));
        let (poly, _) = partition_polynomial(&g, &Constraints::default(), None).unwrap();
        let brute = brute_polynomial(&g);
        for (a, b) in poly.0.iter().zip(&brute) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }

        let must_red = vec![true, false, false, true];
        let (constrained, _) = partition_polynomial(&g, &Constraints { must_red: must_red.clone() }, None).unwrap();
        let mut c = vec![0.0; 3];
        let mut uf = g.union_find();
        for mask in 0..1u64 << g.n_bonds() {
            let w = g.weight(mask, 1.0, &mut uf);
            if w > 0.0 && [0, 3].iter().all(|&v| uf.same(v, g.n_vertices)) {
                c[g.bond_weight(mask).1] += w;
            }
        }
        for (a, b) in constrained.0.iter().zip(&c) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn polynomial_evaluation() {
        let p = Polynomial(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.eval_odds(2.0), 17.0);
        assert!((p.eval_prob(0.5) - 6.0 / 4.0).abs() < 1e-15);
        assert!((p.mean_open(0.5) - 8.0 / 6.0).abs() < 1e-15);
    }
}
