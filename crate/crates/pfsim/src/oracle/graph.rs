//! Random-cluster models on small explicit graphs, with wired boundary
//! classes, optional lumping of parallel boundary bonds and a marked edge
//! set whose probability is a free parameter.

use crate::lattice::{ModelParams, System};
use crate::rc_coupling::UnionFind;

/// Far endpoint of a bond: another vertex or a wired boundary class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum End {
    Vertex(usize),
    Class(u8),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bond {
    pub a: usize,
    pub b: End,
    /// Weight of the open state relative to the closed one.
    pub odds: f64,
    /// Marked bonds take odds `θ/(1−θ)` instead of `odds`.
    pub tilde: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FkGraph {
    pub n_vertices: usize,
    pub n_classes: usize,
    pub bonds: Vec<Bond>,
    pub q: f64,
    /// Restrict to configurations not joining class 0 to class 1.
    pub conditioned: bool,
    /// Domain edge of each bond when built without lumping.
    pub edge_of_bond: Option<Vec<usize>>,
}

/// Open-state weight of `k` parallel bonds of odds `r` treated as one.
pub fn lumped_odds(r: f64, k: usize) -> f64 {
    (1.0 + r).powi(k as i32) - 1.0
}

impl FkGraph {
    pub fn new(n_vertices: usize, n_classes: usize, q: f64, conditioned: bool) -> FkGraph {
        FkGraph {
            n_vertices,
            n_classes,
            bonds: Vec::new(),
            q,
            conditioned,
            edge_of_bond: None,
        }
    }

    pub fn add_bond(&mut self, a: usize, b: End, odds: f64) -> usize {
        self.bonds.push(Bond { a, b, odds, tilde: false });
        self.bonds.len() - 1
    }

    pub fn add_tilde_bond(&mut self, a: usize, b: End) -> usize {
        self.bonds.push(Bond { a, b, odds: f64::NAN, tilde: true });
        self.bonds.len() - 1
    }

    /// The FK graph of a system: interior sites are vertices, boundary sites
    /// are wired by colour class. With `lumped`, the bonds from one site to
    /// one class merge into a single bond.
    pub fn from_system(system: &System, params: &ModelParams, lumped: bool, conditioned: bool) -> FkGraph {
        Self::from_system_closing(system, params, lumped, conditioned, &[])
    }

    /// As [`FkGraph::from_system`], with the domain edges flagged in `closed` held closed.
    pub fn from_system_closing(system: &System, params: &ModelParams, lumped: bool, conditioned: bool, closed: &[bool]) -> FkGraph {
        let d = system.domain();
        let n_int = d.n_interior();
        let r = params.odds();
        let mut g = FkGraph::new(n_int, system.n_classes(), params.q as f64, conditioned);
        let mut edge_of_bond = Vec::new();
        let mut class_count = vec![[0usize; 2]; n_int];
        for (id, e) in d.edges().iter().enumerate() {
            if closed.get(id).copied().unwrap_or(false) {
                continue;
            }
            let (lo, hi) = (e.lo as usize, e.hi as usize);
            let (v, other) = if lo < n_int { (lo, hi) } else { (hi, lo) };
            if other < n_int {
                g.add_bond(v, End::Vertex(other), r);
                edge_of_bond.push(id);
            } else {
                let class = system.class_of(other - n_int);
                if lumped {
                    class_count[v][class as usize] += 1;
                } else {
                    g.add_bond(v, End::Class(class), r);
                    edge_of_bond.push(id);
                }
            }
        }
        if lumped {
            for (v, counts) in class_count.iter().enumerate() {
                for (class, &k) in counts.iter().enumerate() {
                    if k > 0 {
                        g.add_bond(v, End::Class(class as u8), lumped_odds(r, k));
                    }
                }
            }
        } else {
            g.edge_of_bond = Some(edge_of_bond);
        }
        g
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    pub fn state_count(&self) -> f64 {
        2f64.powi(self.bonds.len() as i32)
    }

    pub fn n_tilde(&self) -> usize {
        self.bonds.iter().filter(|b| b.tilde).count()
    }

    fn node(&self, e: End) -> usize {
        match e {
            End::Vertex(v) => v,
            End::Class(c) => self.n_vertices + c as usize,
        }
    }

    /// Unions the open bonds of `mask`; `None` if the configuration is
    /// excluded by conditioning.
    pub fn clusters(&self, mask: u64, uf: &mut UnionFind) -> Option<()> {
        uf.reset();
        for (i, b) in self.bonds.iter().enumerate() {
            if mask >> i & 1 == 1 {
                uf.union(b.a, self.node(b.b));
            }
        }
        if self.conditioned && self.n_classes == 2 && uf.same(self.n_vertices, self.n_vertices + 1) {
            return None;
        }
        Some(())
    }

    pub fn union_find(&self) -> UnionFind {
        UnionFind::new(self.n_vertices + self.n_classes)
    }

    /// Number of open clusters not containing a boundary class.
    pub fn free_clusters(&self, uf: &mut UnionFind) -> usize {
        let class_roots: Vec<usize> = (0..self.n_classes).map(|c| uf.find(self.n_vertices + c)).collect();
        (0..self.n_vertices)
            .filter(|&v| uf.find(v) == v && !class_roots.contains(&v))
            .count()
    }

    /// Product of open-bond odds and the number of open marked bonds.
    pub fn bond_weight(&self, mask: u64) -> (f64, usize) {
        let mut w = 1.0;
        let mut k = 0;
        for (i, b) in self.bonds.iter().enumerate() {
            if mask >> i & 1 == 1 {
                if b.tilde {
                    k += 1;
                } else {
                    w *= b.odds;
                }
            }
        }
        (w, k)
    }

    /// Unnormalised weight `Π odds · t^{k} · q^{κ}` with `t` the marked-bond odds.
    pub fn weight(&self, mask: u64, t: f64, uf: &mut UnionFind) -> f64 {
        if self.clusters(mask, uf).is_none() {
            return 0.0;
        }
        let (w, k) = self.bond_weight(mask);
        let mut class_roots: Vec<usize> = (0..self.n_classes).map(|c| uf.find(self.n_vertices + c)).collect();
        class_roots.dedup();
        w * t.powi(k as i32) * self.q.powi((self.free_clusters(uf) + class_roots.len()) as i32)
    }

    /// Canonical cluster labels of the vertices: 0 and 1 for the boundary
    /// classes, then 2, 3, … in order of first appearance.
    pub fn signature(&self, uf: &mut UnionFind, out: &mut Vec<u8>) -> usize {
        out.clear();
        let class_roots: Vec<usize> = (0..self.n_classes).map(|c| uf.find(self.n_vertices + c)).collect();
        let mut seen: Vec<(usize, u8)> = Vec::new();
        let mut next = 2u8;
        for v in 0..self.n_vertices {
            let r = uf.find(v);
            let label = if let Some(c) = class_roots.iter().position(|&x| x == r) {
                c as u8
            } else if let Some(&(_, l)) = seen.iter().find(|(x, _)| *x == r) {
                l
            } else {
                seen.push((r, next));
                next += 1;
                next - 1
            };
            out.push(label);
        }
        seen.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoundaryCondition, DomainKind};

    #[test]
    fn lumping_counts() {
        let sys = System::build(DomainKind::FloorBox, 2, 2, BoundaryCondition::Floor).unwrap();
        let p = ModelParams::new(2, 1.0).unwrap();
        let raw = FkGraph::from_system(&sys, &p, false, true);
        let lumped = FkGraph::from_system(&sys, &p, true, true);
        assert_eq!(raw.n_bonds(), 36);
        assert_eq!(lumped.n_bonds(), 12 + 8 + 4);
        assert!((lumped_odds(1.0, 2) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_edge_weights() {
        let mut g = FkGraph::new(2, 0, 2.0, false);
        g.add_bond(0, End::Vertex(1), 1.0);
        let mut uf = g.union_find();
        assert_eq!(g.weight(0, 0.0, &mut uf), 4.0);
        assert_eq!(g.weight(1, 0.0, &mut uf), 2.0);
    }
}
