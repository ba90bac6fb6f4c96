//! Sites of the half-integer lattice, dual plaquettes, boxed domains and
//! boundary conditions.
//!
//! A site `(i, j, k)` stands for the point `(i+½, j+½, k+½)`. Heights are
//! kept in doubled units so that half-integers compare exactly.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Color = u8;
pub const BLUE: Color = 1;
pub const RED: Color = 2;

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(a: usize) -> Axis {
        Axis::ALL[a]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SiteCoord {
    pub i: i32,
    pub j: i32,
    pub k: i32,
}

impl Ord for SiteCoord {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.k, self.j, self.i).cmp(&(other.k, other.j, other.i))
    }
}

impl PartialOrd for SiteCoord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl SiteCoord {
    pub const fn new(i: i32, j: i32, k: i32) -> Self {
        SiteCoord { i, j, k }
    }

    pub fn from_array(c: [i32; 3]) -> Self {
        SiteCoord::new(c[0], c[1], c[2])
    }

    pub fn to_array(self) -> [i32; 3] {
        [self.i, self.j, self.k]
    }

    /// Height in doubled units: `2k + 1`.
    pub fn height2(self) -> i32 {
        2 * self.k + 1
    }

    pub fn height(self) -> f64 {
        self.k as f64 + 0.5
    }

    pub fn step(self, axis: Axis, delta: i32) -> Self {
        let mut c = self.to_array();
        c[axis.index()] += delta;
        SiteCoord::from_array(c)
    }

    pub fn is_adjacent(self, other: SiteCoord) -> bool {
        let d = [
            (self.i - other.i).abs(),
            (self.j - other.j).abs(),
            (self.k - other.k).abs(),
        ];
        d.iter().sum::<i32>() == 1
    }

    /// Neighbours in the order −x, +x, −y, +y, −z, +z.
    pub fn neighbors(self) -> [SiteCoord; 6] {
        [
            self.step(Axis::X, -1),
            self.step(Axis::X, 1),
            self.step(Axis::Y, -1),
            self.step(Axis::Y, 1),
            self.step(Axis::Z, -1),
            self.step(Axis::Z, 1),
        ]
    }
}

/// Unit square dual to the edge `(lo, lo + e_axis)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Plaquette {
    pub lo: SiteCoord,
    pub axis: Axis,
}

impl Plaquette {
    pub fn of_edge(u: SiteCoord, v: SiteCoord) -> Result<Plaquette> {
        if !u.is_adjacent(v) {
            return Err(Error::NotAdjacent(u, v));
        }
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        let axis = if hi.i != lo.i {
            Axis::X
        } else if hi.j != lo.j {
            Axis::Y
        } else {
            Axis::Z
        };
        Ok(Plaquette { lo, axis })
    }

    pub fn sites(self) -> (SiteCoord, SiteCoord) {
        (self.lo, self.lo.step(self.axis, 1))
    }

    pub fn is_horizontal(self) -> bool {
        self.axis == Axis::Z
    }

    /// Doubled coordinates of the midpoint.
    pub fn midpoint2(self) -> [i32; 3] {
        let mut m = [2 * self.lo.i + 1, 2 * self.lo.j + 1, 2 * self.lo.k + 1];
        m[self.axis.index()] += 1;
        m
    }

    /// Height of the midpoint in doubled units.
    pub fn height2(self) -> i32 {
        self.midpoint2()[2]
    }

    pub fn height(self) -> f64 {
        self.height2() as f64 / 2.0
    }

    /// Integer height of a horizontal plaquette.
    pub fn level(self) -> Option<i32> {
        self.is_horizontal().then_some(self.lo.k + 1)
    }

    /// Column `(i, j)` of a horizontal plaquette.
    pub fn cell(self) -> Option<(i32, i32)> {
        self.is_horizontal().then_some((self.lo.i, self.lo.j))
    }

    pub fn translate(self, di: i32, dj: i32, dk: i32) -> Plaquette {
        Plaquette {
            lo: SiteCoord::new(self.lo.i + di, self.lo.j + dj, self.lo.k + dk),
            axis: self.axis,
        }
    }

    /// Lowest corner of the square in ℤ³.
    pub fn corner(self) -> [i32; 3] {
        let mut c = self.lo.to_array();
        c[self.axis.index()] += 1;
        c
    }

    pub fn from_corner(axis: Axis, c: [i32; 3]) -> Plaquette {
        let mut l = c;
        l[axis.index()] -= 1;
        Plaquette {
            lo: SiteCoord::from_array(l),
            axis,
        }
    }

    /// Plaquettes sharing a unit segment with `self`.
    pub fn one_neighbors(self) -> Vec<Plaquette> {
        let a = self.axis.index();
        let c = self.corner();
        let mut out = Vec::with_capacity(12);
        for b in (0..3).filter(|&b| b != a) {
            for s in 0..2 {
                let mut x = c;
                x[b] += s;
                for t in 0..2 {
                    let mut p = x;
                    p[b] -= t;
                    out.push(Plaquette::from_corner(Axis::from_index(a), p));
                    let mut p = x;
                    p[a] -= t;
                    out.push(Plaquette::from_corner(Axis::from_index(b), p));
                }
            }
        }
        out.sort();
        out.dedup();
        out.retain(|&p| p != self);
        out
    }

    /// Plaquettes sharing at least one point with `self`.
    pub fn zero_neighbors(self) -> Vec<Plaquette> {
        let a = self.axis.index();
        let (b, d) = other_axes(a);
        let c = self.corner();
        let mut out = Vec::with_capacity(32);
        for s in 0..2 {
            for t in 0..2 {
                let mut x = c;
                x[b] += s;
                x[d] += t;
                for a2 in 0..3 {
                    let (b2, d2) = other_axes(a2);
                    for u in 0..2 {
                        for v in 0..2 {
                            let mut p = x;
                            p[b2] -= u;
                            p[d2] -= v;
                            out.push(Plaquette::from_corner(Axis::from_index(a2), p));
                        }
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out.retain(|&p| p != self);
        out
    }
}

fn other_axes(a: usize) -> (usize, usize) {
    match a {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainKind {
    /// Heights in (0, m).
    FloorBox,
    /// Heights in (−m, m).
    SlabBox,
}

/// An edge with at least one interior endpoint. `lo < hi` in site order and
/// both are extended indices (interior first, then boundary).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub lo: u32,
    pub hi: u32,
    pub axis: Axis,
}

#[derive(Debug)]
pub struct Domain {
    kind: DomainKind,
    n: usize,
    m: usize,
    foot_lo: i32,
    k_lo: i32,
    k_hi: i32,
    sites: Vec<SiteCoord>,
    n_interior: usize,
    nbr: Vec<u32>,
    edges: Vec<Edge>,
    edge_of: Vec<u32>,
    n_interior_edges: usize,
    grid_site: Vec<u32>,
    grid_edge: Vec<u32>,
    edge_adj: OnceLock<(Vec<u32>, Vec<u32>)>,
}

impl Domain {
    pub fn new(kind: DomainKind, n: usize, m: usize) -> Result<Domain> {
        if n < 2 {
            return Err(Error::Geometry(format!("side length n = {n} must be at least 2")));
        }
        if m < 1 {
            return Err(Error::Geometry(format!("vertical extent m = {m} must be at least 1")));
        }
        if n > 4096 || m > 4096 {
            return Err(Error::Geometry("box too large".into()));
        }
        let foot_lo = -((n / 2) as i32);
        let (k_lo, k_hi) = match kind {
            DomainKind::FloorBox => (0, m as i32),
            DomainKind::SlabBox => (-(m as i32), m as i32),
        };
        let mut d = Domain {
            kind,
            n,
            m,
            foot_lo,
            k_lo,
            k_hi,
            sites: Vec::new(),
            n_interior: 0,
            nbr: Vec::new(),
            edges: Vec::new(),
            edge_of: Vec::new(),
            n_interior_edges: 0,
            grid_site: Vec::new(),
            grid_edge: Vec::new(),
            edge_adj: OnceLock::new(),
        };
        d.build();
        Ok(d)
    }

    fn build(&mut self) {
        let n = self.n as i32;
        let (lo, hi) = (self.foot_lo, self.foot_lo + n);
        let mut interior = Vec::new();
        for k in self.k_lo..self.k_hi {
            for j in lo..hi {
                for i in lo..hi {
                    interior.push(SiteCoord::new(i, j, k));
                }
            }
        }
        let mut boundary = BTreeSet::new();
        for s in &interior {
            for t in s.neighbors() {
                if !self.is_interior(t) {
                    boundary.insert(t);
                }
            }
        }
        self.n_interior = interior.len();
        self.sites = interior;
        self.sites.extend(boundary);
        self.grid_site = vec![NONE; self.grid_len()];
        for (idx, s) in self.sites.iter().enumerate() {
            let g = self.grid_index(*s).expect("site inside extended grid");
            self.grid_site[g] = idx as u32;
        }
        self.nbr = Vec::with_capacity(6 * self.n_interior);
        for v in 0..self.n_interior {
            for t in self.sites[v].neighbors() {
                self.nbr.push(self.site_index(t).expect("neighbour enumerated"));
            }
        }
        let mut keyed = Vec::new();
        for v in 0..self.n_interior {
            let s = self.sites[v];
            for (d, t) in s.neighbors().into_iter().enumerate() {
                let tv = self.nbr[6 * v + d];
                // each interior-interior edge once, from its lower endpoint
                if (tv as usize) < self.n_interior && t < s {
                    continue;
                }
                let (a, b) = if s < t { (s, t) } else { (t, s) };
                let axis = Axis::from_index(d / 2);
                let ai = self.site_index(a).unwrap();
                let bi = self.site_index(b).unwrap();
                keyed.push((a, axis, Edge { lo: ai, hi: bi, axis }));
            }
        }
        keyed.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        self.edges = keyed.into_iter().map(|x| x.2).collect();
        self.n_interior_edges = self
            .edges
            .iter()
            .filter(|e| (e.hi as usize) < self.n_interior)
            .count();
        self.grid_edge = vec![NONE; 3 * self.grid_len()];
        self.edge_of = vec![NONE; 6 * self.n_interior];
        for (id, e) in self.edges.iter().enumerate() {
            let g = self.grid_index(self.sites[e.lo as usize]).unwrap();
            self.grid_edge[3 * g + e.axis.index()] = id as u32;
            let a = e.axis.index();
            if (e.lo as usize) < self.n_interior {
                self.edge_of[6 * e.lo as usize + 2 * a + 1] = id as u32;
            }
            if (e.hi as usize) < self.n_interior {
                self.edge_of[6 * e.hi as usize + 2 * a] = id as u32;
            }
        }
    }

    fn grid_dims(&self) -> (usize, usize) {
        (self.n + 2, (self.k_hi - self.k_lo) as usize + 2)
    }

    fn grid_len(&self) -> usize {
        let (g, h) = self.grid_dims();
        g * g * h
    }

    fn grid_index(&self, s: SiteCoord) -> Option<usize> {
        let (g, h) = self.grid_dims();
        let x = s.i - (self.foot_lo - 1);
        let y = s.j - (self.foot_lo - 1);
        let z = s.k - (self.k_lo - 1);
        if x < 0 || y < 0 || z < 0 || x >= g as i32 || y >= g as i32 || z >= h as i32 {
            return None;
        }
        Some((z as usize * g + y as usize) * g + x as usize)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Smallest footprint coordinate; the footprint is `[lo, lo + n)²`.
    pub fn foot_lo(&self) -> i32 {
        self.foot_lo
    }

    /// Interior layers are `k_lo..k_hi`.
    pub fn k_range(&self) -> (i32, i32) {
        (self.k_lo, self.k_hi)
    }

    pub fn is_interior(&self, s: SiteCoord) -> bool {
        let hi = self.foot_lo + self.n as i32;
        (self.foot_lo..hi).contains(&s.i)
            && (self.foot_lo..hi).contains(&s.j)
            && (self.k_lo..self.k_hi).contains(&s.k)
    }

    pub fn in_footprint(&self, i: i32, j: i32) -> bool {
        let hi = self.foot_lo + self.n as i32;
        (self.foot_lo..hi).contains(&i) && (self.foot_lo..hi).contains(&j)
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_boundary(&self) -> usize {
        self.sites.len() - self.n_interior
    }

    /// Interior sites followed by boundary sites, each block in (k, j, i) order.
    pub fn sites(&self) -> &[SiteCoord] {
        &self.sites
    }

    pub fn interior_sites(&self) -> &[SiteCoord] {
        &self.sites[..self.n_interior]
    }

    pub fn boundary_sites(&self) -> &[SiteCoord] {
        &self.sites[self.n_interior..]
    }

    pub fn site(&self, idx: usize) -> SiteCoord {
        self.sites[idx]
    }

    /// Extended index (interior or boundary) of a site, if it belongs to the domain.
    pub fn site_index(&self, s: SiteCoord) -> Option<u32> {
        let g = self.grid_index(s)?;
        let v = self.grid_site[g];
        (v != NONE).then_some(v)
    }

    /// Index of an interior site from its footprint position and layer.
    pub fn interior_index(&self, i: i32, j: i32, k: i32) -> Option<usize> {
        self.is_interior(SiteCoord::new(i, j, k)).then(|| {
            let n = self.n as i32;
            (((k - self.k_lo) * n + (j - self.foot_lo)) * n + (i - self.foot_lo)) as usize
        })
    }

    /// Six neighbours (extended indices) of interior site `v`, ordered −x, +x, −y, +y, −z, +z.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.nbr[6 * v..6 * v + 6]
    }

    /// Edge ids at interior site `v`, in the same direction order as [`Domain::neighbors`].
    pub fn incident_edges(&self, v: usize) -> &[u32] {
        &self.edge_of[6 * v..6 * v + 6]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_interior_edges(&self) -> usize {
        self.n_interior_edges
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.edges.len() - self.n_interior_edges
    }

    pub fn edge_sites(&self, e: usize) -> (SiteCoord, SiteCoord) {
        let ed = self.edges[e];
        (self.sites[ed.lo as usize], self.sites[ed.hi as usize])
    }

    pub fn plaquette(&self, e: usize) -> Plaquette {
        let ed = self.edges[e];
        Plaquette {
            lo: self.sites[ed.lo as usize],
            axis: ed.axis,
        }
    }

    /// Edge id dual to a plaquette, if that edge belongs to the domain.
    pub fn edge_of_plaquette(&self, p: Plaquette) -> Option<usize> {
        let g = self.grid_index(p.lo)?;
        let e = self.grid_edge[3 * g + p.axis.index()];
        (e != NONE).then_some(e as usize)
    }

    pub fn edge_between(&self, u: SiteCoord, v: SiteCoord) -> Result<Option<usize>> {
        Ok(self.edge_of_plaquette(Plaquette::of_edge(u, v)?))
    }

    /// 1-adjacency among domain plaquettes as CSR `(offsets, targets)`.
    pub fn plaquette_adjacency(&self) -> (&[u32], &[u32]) {
        let (o, t) = self.edge_adj.get_or_init(|| {
            let mut offsets = Vec::with_capacity(self.edges.len() + 1);
            let mut targets = Vec::with_capacity(12 * self.edges.len());
            offsets.push(0u32);
            for e in 0..self.edges.len() {
                for p in self.plaquette(e).one_neighbors() {
                    if let Some(f) = self.edge_of_plaquette(p) {
                        targets.push(f as u32);
                    }
                }
                offsets.push(targets.len() as u32);
            }
            (offsets, targets)
        });
        (o, t)
    }

    pub fn plaquette_neighbors(&self, e: usize) -> &[u32] {
        let (o, t) = self.plaquette_adjacency();
        &t[o[e] as usize..o[e + 1] as usize]
    }

    /// Column index of footprint cell `(i, j)` in row-major order.
    pub fn column_index(&self, i: i32, j: i32) -> Option<usize> {
        self.in_footprint(i, j).then(|| {
            ((j - self.foot_lo) as usize) * self.n + (i - self.foot_lo) as usize
        })
    }

    pub fn column_cell(&self, c: usize) -> (i32, i32) {
        (
            self.foot_lo + (c % self.n) as i32,
            self.foot_lo + (c / self.n) as i32,
        )
    }

    /// Distance from column `(i, j)` to the lateral boundary, in lattice units.
    pub fn lateral_distance(&self, i: i32, j: i32) -> i32 {
        let hi = self.foot_lo + self.n as i32;
        (i - self.foot_lo + 1)
            .min(hi - i)
            .min(j - self.foot_lo + 1)
            .min(hi - j)
    }

    pub fn boundary_color(&self, bc: BoundaryCondition, s: SiteCoord) -> Result<Color> {
        match self.site_index(s) {
            Some(v) if v as usize >= self.n_interior => Ok(bc.color_of(self, s)),
            _ => Err(Error::NotBoundary(s)),
        }
    }
}

pub fn build_domain(kind: DomainKind, n: usize, m: usize) -> Result<Domain> {
    Domain::new(kind, n, m)
}

pub fn plaquette_of_edge(u: SiteCoord, v: SiteCoord) -> Result<Plaquette> {
    Plaquette::of_edge(u, v)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Blue below the domain's bottom face, red elsewhere.
    #[default]
    Floor,
    /// Red at heights above `h`, blue below.
    Split { h: i32 },
    RedAll,
}

impl BoundaryCondition {
    pub fn dobrushin() -> Self {
        BoundaryCondition::Split { h: 0 }
    }

    fn color_of(self, d: &Domain, s: SiteCoord) -> Color {
        match self {
            BoundaryCondition::Floor => {
                if s.k < d.k_lo {
                    BLUE
                } else {
                    RED
                }
            }
            BoundaryCondition::Split { h } => {
                if s.height2() > 2 * h {
                    RED
                } else {
                    BLUE
                }
            }
            BoundaryCondition::RedAll => RED,
        }
    }

    /// Height (integer) of the red/blue boundary plane, if any.
    pub fn split_height(self, d: &Domain) -> Option<i32> {
        match self {
            BoundaryCondition::Floor => Some(d.k_lo),
            BoundaryCondition::Split { h } => Some(h),
            BoundaryCondition::RedAll => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub q: u8,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(q: u8, beta: f64) -> Result<Self> {
        if q < 2 {
            return Err(Error::Param(format!("q = {q} must be at least 2")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::Param(format!("beta = {beta} must be finite and nonnegative")));
        }
        Ok(ModelParams { q, beta })
    }

    pub fn p(&self) -> f64 {
        -(-self.beta).exp_m1()
    }

    /// Odds `p / (1 − p) = e^β − 1`.
    pub fn odds(&self) -> f64 {
        self.beta.exp_m1()
    }
}

/// Wiring class of a boundary site.
pub const CLASS_RED: u8 = 0;
pub const CLASS_BLUE: u8 = 1;

/// A domain together with its boundary condition.
#[derive(Debug)]
pub struct System {
    domain: Arc<Domain>,
    bc: BoundaryCondition,
    bcolor: Vec<Color>,
    n_classes: usize,
    full_seeds: Vec<u32>,
}

impl System {
    pub fn new(domain: Arc<Domain>, bc: BoundaryCondition) -> Result<Arc<System>> {
        let bcolor: Vec<Color> = domain
            .boundary_sites()
            .iter()
            .map(|&s| bc.color_of(&domain, s))
            .collect();
        let has_blue = bcolor.contains(&BLUE);
        let has_red = bcolor.contains(&RED);
        if !has_red {
            return Err(Error::Param(format!("{bc:?} leaves no red boundary")));
        }
        if matches!(bc, BoundaryCondition::Split { .. }) && !has_blue {
            return Err(Error::Param(format!("{bc:?} leaves no blue boundary")));
        }
        let n_classes = if has_blue { 2 } else { 1 };
        let full_seeds = match bc.split_height(&domain) {
            Some(h) if has_blue => ring_seeds(&domain, h),
            _ => Vec::new(),
        };
        Ok(Arc::new(System {
            domain,
            bc,
            bcolor,
            n_classes,
            full_seeds,
        }))
    }

    pub fn build(kind: DomainKind, n: usize, m: usize, bc: BoundaryCondition) -> Result<Arc<System>> {
        System::new(Arc::new(Domain::new(kind, n, m)?), bc)
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Colour of boundary site `b` (boundary-local index).
    pub fn boundary_color_at(&self, b: usize) -> Color {
        self.bcolor[b]
    }

    pub fn boundary_colors(&self) -> &[Color] {
        &self.bcolor
    }

    /// Wiring class of boundary site `b` (boundary-local index).
    pub fn class_of(&self, b: usize) -> u8 {
        if self.bcolor[b] == BLUE {
            CLASS_BLUE
        } else {
            CLASS_RED
        }
    }

    /// Domain edges 1-adjacent to the red/blue boundary plaquettes.
    pub fn full_interface_seeds(&self) -> &[u32] {
        &self.full_seeds
    }
}

/// Horizontal plaquettes at the split height over the cells just outside the
/// footprint play the role of the red/blue boundary plaquettes.
fn ring_seeds(d: &Domain, h: i32) -> Vec<u32> {
    let lo = d.foot_lo - 1;
    let hi = d.foot_lo + d.n as i32;
    let mut seeds = BTreeSet::new();
    for a in lo..=hi {
        for b in lo..=hi {
            if d.in_footprint(a, b) {
                continue;
            }
            let ring = Plaquette {
                lo: SiteCoord::new(a, b, h - 1),
                axis: Axis::Z,
            };
            for p in ring.one_neighbors() {
                if let Some(e) = d.edge_of_plaquette(p) {
                    seeds.insert(e as u32);
                }
            }
        }
    }
    seeds.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_box_counts() {
        let d = Domain::new(DomainKind::FloorBox, 2, 2).unwrap();
        assert_eq!(d.n_interior(), 8);
        assert_eq!(d.n_boundary(), 24);
    }

    #[test]
    fn slab_heights() {
        let d = Domain::new(DomainKind::SlabBox, 2, 1).unwrap();
        let hs: BTreeSet<i32> = d.interior_sites().iter().map(|s| s.height2()).collect();
        assert_eq!(hs.into_iter().collect::<Vec<_>>(), vec![-1, 1]);
    }

    #[test]
    fn degenerate_rejected() {
        assert!(Domain::new(DomainKind::FloorBox, 1, 2).is_err());
        assert!(Domain::new(DomainKind::FloorBox, 2, 0).is_err());
    }

    #[test]
    fn plaquette_examples() {
        let o = SiteCoord::new(0, 0, 0);
        let p = plaquette_of_edge(o, SiteCoord::new(0, 0, 1)).unwrap();
        assert!(p.is_horizontal());
        assert_eq!(p.level(), Some(1));
        assert_eq!(p.corner(), [0, 0, 1]);
        let p = plaquette_of_edge(o, SiteCoord::new(1, 0, 0)).unwrap();
        assert!(!p.is_horizontal());
        assert_eq!(p.height2(), 1);
        assert_eq!(p.corner(), [1, 0, 0]);
        assert!(plaquette_of_edge(o, SiteCoord::new(1, 1, 0)).is_err());
    }

    #[test]
    fn adjacency_counts() {
        let p = Plaquette { lo: SiteCoord::new(0, 0, 0), axis: Axis::Z };
        assert_eq!(p.one_neighbors().len(), 12);
        for q in p.one_neighbors() {
            assert!(q.one_neighbors().contains(&p));
        }
        let z = p.zero_neighbors();
        for q in &z {
            assert!(q.zero_neighbors().contains(&p));
        }
        assert!(p.one_neighbors().iter().all(|q| z.contains(q)));
    }

    #[test]
    fn boundary_colors() {
        let d = Domain::new(DomainKind::FloorBox, 2, 2).unwrap();
        let below = SiteCoord::new(0, 0, -1);
        assert_eq!(d.boundary_color(BoundaryCondition::Floor, below).unwrap(), BLUE);
        let side = SiteCoord::new(-2, 0, 0);
        assert_eq!(d.boundary_color(BoundaryCondition::Floor, side).unwrap(), RED);
        assert!(d.boundary_color(BoundaryCondition::Floor, SiteCoord::new(0, 0, 0)).is_err());
        let s = Domain::new(DomainKind::SlabBox, 2, 2).unwrap();
        let up = SiteCoord::new(-2, 0, 0);
        assert_eq!(s.boundary_color(BoundaryCondition::dobrushin(), up).unwrap(), RED);
        let down = SiteCoord::new(-2, 0, -1);
        assert_eq!(s.boundary_color(BoundaryCondition::dobrushin(), down).unwrap(), BLUE);
        assert_eq!(s.boundary_color(BoundaryCondition::RedAll, down).unwrap(), RED);
    }

    #[test]
    fn wiring_classes() {
        let fl = System::build(DomainKind::FloorBox, 3, 2, BoundaryCondition::Floor).unwrap();
        assert_eq!(fl.n_classes(), 2);
        let red = System::build(DomainKind::FloorBox, 3, 2, BoundaryCondition::RedAll).unwrap();
        assert_eq!(red.n_classes(), 1);
        let dob = System::build(DomainKind::SlabBox, 3, 2, BoundaryCondition::dobrushin()).unwrap();
        for (b, s) in dob.domain().boundary_sites().iter().enumerate() {
            assert_eq!(dob.boundary_color_at(b) == RED, s.k >= 0);
        }
    }

    #[test]
    fn edges_are_sorted_and_dual() {
        let d = Domain::new(DomainKind::SlabBox, 3, 2).unwrap();
        let mut seen = BTreeSet::new();
        for e in 0..d.n_edges() {
            let p = d.plaquette(e);
            assert!(seen.insert(p));
            assert_eq!(d.edge_of_plaquette(p), Some(e));
            let (u, v) = d.edge_sites(e);
            assert_eq!(Plaquette::of_edge(u, v).unwrap(), p);
        }
        let keys: Vec<_> = (0..d.n_edges()).map(|e| (d.plaquette(e).lo, d.plaquette(e).axis)).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }
}
