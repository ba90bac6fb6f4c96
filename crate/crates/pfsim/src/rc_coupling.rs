//! Random-cluster configurations, the Edwards–Sokal coupling in both
//! directions, cluster labelling and exact FK weights.
//!
//! Boundary sites never appear as separate vertices: every boundary endpoint is
//! replaced by the super-vertex of its wiring class.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Color, ModelParams, System, BLUE, CLASS_BLUE, CLASS_RED, RED};
use crate::potts_sampler::SpinConfig;

/// Union-find with path compression and union by size. Ties go to the lower index.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.size.iter_mut().for_each(|s| *s = 1);
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        let mut cur = x;
        while self.parent[cur] as usize != root {
            let next = self.parent[cur] as usize;
            self.parent[cur] = root as u32;
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (sa, sb) = (self.size[ra], self.size[rb]);
        let (root, child) = if sa > sb || (sa == sb && ra < rb) {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[child] = root as u32;
        self.size[root] = sa + sb;
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}

/// Union-find node of an extended site index: interior sites map to
/// themselves, boundary sites to their class super-vertex.
#[inline]
pub(crate) fn node_of(system: &System, ext: u32) -> usize {
    let n_int = system.domain().n_interior();
    let e = ext as usize;
    if e < n_int {
        e
    } else {
        n_int + system.class_of(e - n_int) as usize
    }
}

#[derive(Clone, Debug)]
pub struct EdgeConfig {
    system: Arc<System>,
    open: Vec<bool>,
}

impl PartialEq for EdgeConfig {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.system, &other.system) && self.open == other.open
    }
}

impl EdgeConfig {
    pub fn all_closed(system: Arc<System>) -> Self {
        let n = system.domain().n_edges();
        EdgeConfig { system, open: vec![false; n] }
    }

    pub fn all_open(system: Arc<System>) -> Self {
        let n = system.domain().n_edges();
        EdgeConfig { system, open: vec![true; n] }
    }

    pub fn from_bits(system: Arc<System>, open: Vec<bool>) -> Result<Self> {
        if open.len() != system.domain().n_edges() {
            return Err(Error::Param(format!(
                "expected {} edge bits, got {}",
                system.domain().n_edges(),
                open.len()
            )));
        }
        Ok(EdgeConfig { system, open })
    }

    pub fn system(&self) -> &Arc<System> {
        &self.system
    }

    pub fn is_open(&self, e: usize) -> bool {
        self.open[e]
    }

    pub fn set(&mut self, e: usize, open: bool) {
        self.open[e] = open;
    }

    pub fn bits(&self) -> &[bool] {
        &self.open
    }

    pub fn n_open(&self) -> usize {
        self.open.iter().filter(|&&b| b).count()
    }

    fn union_find(&self) -> UnionFind {
        let d = self.system.domain();
        let mut uf = UnionFind::new(d.n_interior() + self.system.n_classes());
        for (e, ed) in d.edges().iter().enumerate() {
            if self.open[e] {
                uf.union(node_of(&self.system, ed.lo), node_of(&self.system, ed.hi));
            }
        }
        uf
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClusterInfo {
    pub size: usize,
    pub touches_red: bool,
    pub touches_blue: bool,
}

/// Cluster ids are assigned in order of first appearance over interior sites,
/// then the class super-vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterLabeling {
    pub labels: Vec<u32>,
    pub class_labels: Vec<u32>,
    pub clusters: Vec<ClusterInfo>,
}

impl ClusterLabeling {
    /// Number of clusters with each wiring class counted once.
    pub fn kappa(&self) -> usize {
        self.clusters.len()
    }
}

pub fn cluster_labeling(omega: &EdgeConfig) -> ClusterLabeling {
    let sys = &omega.system;
    let n_int = sys.domain().n_interior();
    let mut uf = omega.union_find();
    let total = n_int + sys.n_classes();
    let mut label_of_root = vec![u32::MAX; total];
    let mut clusters: Vec<ClusterInfo> = Vec::new();
    let mut labels = Vec::with_capacity(total);
    for v in 0..total {
        let r = uf.find(v);
        if label_of_root[r] == u32::MAX {
            label_of_root[r] = clusters.len() as u32;
            clusters.push(ClusterInfo {
                size: 0,
                touches_red: false,
                touches_blue: false,
            });
        }
        let l = label_of_root[r];
        labels.push(l);
        let c = &mut clusters[l as usize];
        if v < n_int {
            c.size += 1;
        } else if (v - n_int) as u8 == CLASS_RED {
            c.touches_red = true;
        } else if (v - n_int) as u8 == CLASS_BLUE {
            c.touches_blue = true;
        }
    }
    let class_labels = labels.split_off(n_int);
    ClusterLabeling {
        labels,
        class_labels,
        clusters,
    }
}

pub fn fk_log_weight(omega: &EdgeConfig, params: &ModelParams) -> f64 {
    let open = omega.n_open();
    let kappa = cluster_labeling(omega).kappa();
    let edge_term = if open == 0 {
        0.0
    } else {
        open as f64 * params.odds().ln()
    };
    edge_term + kappa as f64 * (params.q as f64).ln()
}

/// True iff no open path joins the red and blue boundary classes.
pub fn check_disconnection(omega: &EdgeConfig) -> bool {
    let sys = &omega.system;
    if sys.n_classes() < 2 {
        return true;
    }
    let n_int = sys.domain().n_interior();
    let mut uf = omega.union_find();
    !uf.same(n_int + CLASS_RED as usize, n_int + CLASS_BLUE as usize)
}

/// Opens every monochromatic edge independently with probability p.
pub fn couple_edges_from_spins<R: Rng + ?Sized>(
    sigma: &SpinConfig,
    params: &ModelParams,
    rng: &mut R,
) -> EdgeConfig {
    let sys = sigma.system().clone();
    let p = params.p();
    let d = sys.domain();
    let open = d
        .edges()
        .iter()
        .map(|ed| sigma.ext_color(ed.lo) == sigma.ext_color(ed.hi) && rng.gen::<f64>() < p)
        .collect();
    EdgeConfig { system: sys, open }
}

/// Colours the red-class cluster red, the blue-class cluster blue and every
/// other cluster uniformly at random (drawn in cluster-id order).
pub fn color_spins_from_edges<R: Rng + ?Sized>(
    omega: &EdgeConfig,
    params: &ModelParams,
    rng: &mut R,
) -> Result<SpinConfig> {
    let lab = cluster_labeling(omega);
    if lab.clusters.iter().any(|c| c.touches_red && c.touches_blue) {
        return Err(Error::DisconnectionViolated);
    }
    let cluster_colors: Vec<Color> = lab
        .clusters
        .iter()
        .map(|c| {
            if c.touches_red {
                RED
            } else if c.touches_blue {
                BLUE
            } else {
                rng.gen_range(1..=params.q)
            }
        })
        .collect();
    let colors = lab.labels.iter().map(|&l| cluster_colors[l as usize]).collect();
    SpinConfig::from_colors(omega.system.clone(), colors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoundaryCondition, DomainKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fl(n: usize, m: usize) -> Arc<System> {
        System::build(DomainKind::FloorBox, n, m, BoundaryCondition::Floor).unwrap()
    }

    #[test]
    fn union_find_ties_go_low() {
        let mut uf = UnionFind::new(4);
        uf.union(3, 1);
        assert_eq!(uf.find(3), 1);
        uf.union(0, 2);
        uf.union(2, 3);
        assert_eq!(uf.find(3), 0);
        assert!(!uf.union(1, 2));
    }

    #[test]
    fn all_closed_kappa() {
        let sys = fl(2, 2);
        let w = EdgeConfig::all_closed(sys.clone());
        assert_eq!(cluster_labeling(&w).kappa(), 8 + 2);
        assert!(check_disconnection(&w));
        assert!(!check_disconnection(&EdgeConfig::all_open(sys)));
    }

    #[test]
    fn all_open_red_all_one_cluster() {
        let sys = System::build(DomainKind::FloorBox, 2, 2, BoundaryCondition::RedAll).unwrap();
        let w = EdgeConfig::all_open(sys.clone());
        assert_eq!(cluster_labeling(&w).kappa(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = color_spins_from_edges(&w, &ModelParams::new(3, 1.0).unwrap(), &mut rng).unwrap();
        assert!(s.colors().iter().all(|&c| c == RED));
    }

    #[test]
    fn vertical_column_connects() {
        let sys = fl(2, 2);
        let d = sys.domain().clone();
        let mut w = EdgeConfig::all_closed(sys);
        let v0 = d.interior_index(0, 0, 0).unwrap();
        let v1 = d.interior_index(0, 0, 1).unwrap();
        for v in [v0, v1] {
            for &e in &d.incident_edges(v)[4..6] {
                w.set(e as usize, true);
            }
        }
        assert!(!check_disconnection(&w));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            color_spins_from_edges(&w, &ModelParams::new(2, 1.0).unwrap(), &mut rng),
            Err(Error::DisconnectionViolated)
        ));
    }

    #[test]
    fn coupling_closes_bichromatic() {
        let sys = fl(3, 2);
        let params = ModelParams::new(2, 50.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sigma = SpinConfig::uniform(sys.clone(), BLUE);
        let w = couple_edges_from_spins(&sigma, &params, &mut rng);
        for (e, ed) in sys.domain().edges().iter().enumerate() {
            let mono = sigma.ext_color(ed.lo) == sigma.ext_color(ed.hi);
            assert_eq!(w.is_open(e), mono);
        }
    }

    #[test]
    fn weight_additivity() {
        // two isolated open edges vs one: log-weight changes by log odds − log q
        let sys = fl(2, 1);
        let params = ModelParams::new(3, 0.8).unwrap();
        let mut w = EdgeConfig::all_closed(sys.clone());
        let base = fk_log_weight(&w, &params);
        let d = sys.domain();
        let e = d.edge_between(d.site(0), d.site(1)).unwrap().unwrap();
        w.set(e, true);
        let one = fk_log_weight(&w, &params);
        assert!((one - base - (params.odds().ln() - 3f64.ln())).abs() < 1e-12);
    }
}
