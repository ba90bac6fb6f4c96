//! Wall and ceiling decomposition of full interfaces, excess areas, hulls
//! and outermost walls.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interfaces::{InterfaceLabel, InterfaceSet};
use crate::lattice::{Axis, Plaquette};
use crate::stats::McEstimate;

pub type Cell = (i32, i32);

/// Projection of a vertical plaquette: the unit segment with lower corner
/// `(x, y)`, normal to `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Segment {
    pub axis: Axis,
    pub x: i32,
    pub y: i32,
}

fn segment_of(p: Plaquette) -> Option<Segment> {
    if p.is_horizontal() {
        return None;
    }
    let c = p.corner();
    Some(Segment {
        axis: p.axis,
        x: c[0],
        y: c[1],
    })
}

#[derive(Clone, Debug)]
pub struct Wall {
    /// Wall plaquettes belonging to the interface.
    pub a: Vec<Plaquette>,
    /// Wall plaquettes added by the horizontal augmentation.
    pub b: Vec<Plaquette>,
    cells: BTreeSet<Cell>,
    segments: BTreeSet<Segment>,
    hull: BTreeSet<Cell>,
    /// Some plaquette reaches the lateral boundary of the box.
    pub touches_lateral: bool,
}

impl Wall {
    pub fn projection_cells(&self) -> &BTreeSet<Cell> {
        &self.cells
    }

    pub fn projection_segments(&self) -> &BTreeSet<Segment> {
        &self.segments
    }

    pub fn hull_cells(&self) -> &BTreeSet<Cell> {
        &self.hull
    }

    pub fn hull_area(&self) -> usize {
        self.hull.len()
    }

    /// `m(W) = |A| − |ρ(W)|`.
    pub fn excess_area(&self) -> i64 {
        self.a.len() as i64 - self.cells.len() as i64
    }

    /// Whether `ρ(self)` lies inside the closed hull projection of `other`.
    pub fn inside_hull_of(&self, other: &Wall) -> bool {
        self.cells.iter().all(|c| other.hull.contains(c))
            && self.segments.iter().all(|s| {
                other.segments.contains(s) || {
                    let (c1, c2) = segment_cells(*s);
                    other.hull.contains(&c1) || other.hull.contains(&c2)
                }
            })
    }
}

/// The two cells on either side of a segment.
fn segment_cells(s: Segment) -> (Cell, Cell) {
    match s.axis {
        Axis::X => ((s.x - 1, s.y), (s.x, s.y)),
        _ => ((s.x, s.y - 1), (s.x, s.y)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ceiling {
    pub plaquettes: Vec<Plaquette>,
    pub height: i32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CeilingSet {
    pub ceilings: Vec<Ceiling>,
}

impl CeilingSet {
    pub fn n_plaquettes(&self) -> usize {
        self.ceilings.iter().map(|c| c.plaquettes.len()).sum()
    }
}

/// `I*`: the interface plus every horizontal domain plaquette 1-connected to it.
pub fn star_augment(interface: &InterfaceSet) -> Vec<Plaquette> {
    let d = interface.domain();
    let own: BTreeSet<Plaquette> = interface.plaquettes().into_iter().collect();
    let mut out = own.clone();
    for p in &own {
        for q in p.one_neighbors() {
            if q.is_horizontal() && d.edge_of_plaquette(q).is_some() {
                out.insert(q);
            }
        }
    }
    out.into_iter().collect()
}

/// Splits `I*` into ceilings and walls. Horizontal plaquettes alone over
/// their cell are ceiling plaquettes; every other plaquette is a wall plaquette.
pub fn decompose_walls(interface: &InterfaceSet) -> Result<(Vec<Wall>, CeilingSet)> {
    if interface.label() != InterfaceLabel::Full {
        return Err(Error::Param(format!("walls need a full interface, got {:?}", interface.label())));
    }
    let d = interface.domain().clone();
    let own: HashSet<Plaquette> = interface.plaquettes().into_iter().collect();
    let star = star_augment(interface);
    let mut per_cell: HashMap<Cell, usize> = HashMap::new();
    for p in &star {
        if let Some(c) = p.cell() {
            *per_cell.entry(c).or_default() += 1;
        }
    }
    let is_ceiling = |p: &Plaquette| p.cell().is_some_and(|c| per_cell[&c] == 1);
    let ceiling: HashSet<Plaquette> = star.iter().copied().filter(is_ceiling).collect();
    let wall: HashSet<Plaquette> = star.iter().copied().filter(|p| !is_ceiling(p)).collect();

    let lo = d.foot_lo();
    let hi = lo + d.n() as i32;
    let components = |set: &HashSet<Plaquette>| -> Vec<Vec<Plaquette>> {
        let mut seen: HashSet<Plaquette> = HashSet::new();
        let mut sorted: Vec<Plaquette> = set.iter().copied().collect();
        sorted.sort();
        let mut comps = Vec::new();
        for start in sorted {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(p) = queue.pop_front() {
                for q in p.zero_neighbors() {
                    if set.contains(&q) && seen.insert(q) {
                        comp.push(q);
                        queue.push_back(q);
                    }
                }
            }
            comp.sort();
            comps.push(comp);
        }
        comps
    };

    let ceilings = components(&ceiling)
        .into_iter()
        .map(|plaquettes| {
            let height = plaquettes[0].level().expect("ceiling plaquettes are horizontal");
            Ceiling { plaquettes, height }
        })
        .collect();

    let walls = components(&wall)
        .into_iter()
        .map(|comp| {
            let (a, b): (Vec<Plaquette>, Vec<Plaquette>) = comp.iter().partition(|p| own.contains(p));
            let cells: BTreeSet<Cell> = comp.iter().filter_map(|p| p.cell()).collect();
            let segments: BTreeSet<Segment> = comp.iter().filter_map(|&p| segment_of(p)).collect();
            let touches_lateral = cells
                .iter()
                .any(|&(i, j)| i == lo || j == lo || i == hi - 1 || j == hi - 1)
                || segments.iter().any(|s| match s.axis {
                    Axis::X => s.x == lo || s.x == hi,
                    _ => s.y == lo || s.y == hi,
                });
            let hull = hull_cells(&cells, &segments, lo, hi);
            Wall {
                a,
                b,
                cells,
                segments,
                hull,
                touches_lateral,
            }
        })
        .collect();
    Ok((walls, CeilingSet { ceilings }))
}

/// Cells of `ρ(W)` plus the cells not reachable from outside the box
/// without crossing `ρ(W)`.
fn hull_cells(cells: &BTreeSet<Cell>, segments: &BTreeSet<Segment>, lo: i32, hi: i32) -> BTreeSet<Cell> {
    let (a, b) = (lo - 1, hi);
    let w = (b - a + 1) as usize;
    let idx = |(x, y): Cell| (y - a) as usize * w + (x - a) as usize;
    let mut outside = vec![false; w * w];
    let mut queue = VecDeque::new();
    for t in a..=b {
        for c in [(t, a), (t, b), (a, t), (b, t)] {
            if !outside[idx(c)] && !cells.contains(&c) {
                outside[idx(c)] = true;
                queue.push_back(c);
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        let moves = [
            ((x + 1, y), Segment { axis: Axis::X, x: x + 1, y }),
            ((x - 1, y), Segment { axis: Axis::X, x, y }),
            ((x, y + 1), Segment { axis: Axis::Y, x, y: y + 1 }),
            ((x, y - 1), Segment { axis: Axis::Y, x, y }),
        ];
        for (c, s) in moves {
            if c.0 < a || c.0 > b || c.1 < a || c.1 > b {
                continue;
            }
            if outside[idx(c)] || cells.contains(&c) || segments.contains(&s) {
                continue;
            }
            outside[idx(c)] = true;
            queue.push_back(c);
        }
    }
    let mut hull = cells.clone();
    for y in lo..hi {
        for x in lo..hi {
            if !outside[idx((x, y))] {
                hull.insert((x, y));
            }
        }
    }
    hull
}

/// Indices of walls whose projection lies in no other wall's hull.
pub fn outermost_walls(walls: &[Wall]) -> Vec<usize> {
    (0..walls.len())
        .filter(|&w| (0..walls.len()).all(|v| v == w || !walls[w].inside_hull_of(&walls[v])))
        .collect()
}

/// Per-sample wall statistics; the CSV schema of the walls analysis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WallSample {
    pub sample_id: usize,
    pub full_size: usize,
    pub n_walls: usize,
    pub total_excess: i64,
    pub outermost_hull_area: usize,
    pub level_set_count: usize,
    pub lateral_walls: usize,
    pub identity_holds: bool,
}

/// Decomposes one sample. `level_set_count` counts columns with
/// `overline-hgt_x(I_blue) ≥ h + 1`.
pub fn wall_sample(sample_id: usize, full: &InterfaceSet, blue: &InterfaceSet, h: i32) -> Result<WallSample> {
    let (walls, _) = decompose_walls(full)?;
    let n2 = (full.domain().n() * full.domain().n()) as i64;
    let total_excess: i64 = walls.iter().map(Wall::excess_area).sum();
    let outer = outermost_walls(&walls);
    let outermost_hull_area = outer.iter().map(|&w| walls[w].hull_area()).sum();
    let level_set_count = blue.height_maps().0.into_iter().flatten().filter(|&x| x > h).count();
    Ok(WallSample {
        sample_id,
        full_size: full.len(),
        n_walls: walls.len(),
        total_excess,
        outermost_hull_area,
        level_set_count,
        lateral_walls: walls.iter().filter(|w| w.touches_lateral).count(),
        identity_holds: total_excess == full.len() as i64 - n2,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WallSummary {
    pub outermost_hull_fraction: McEstimate,
    pub level_set_fraction: McEstimate,
    pub full_area_ratio: McEstimate,
    pub identity_violations: usize,
}

pub fn wall_area_statistics(samples: &[WallSample], n: usize) -> WallSummary {
    let n2 = (n * n) as f64;
    let series = |f: &dyn Fn(&WallSample) -> f64| -> McEstimate {
        McEstimate::from_series(&samples.iter().map(f).collect::<Vec<_>>())
    };
    WallSummary {
        outermost_hull_fraction: series(&|s| s.outermost_hull_area as f64 / n2),
        level_set_fraction: series(&|s| s.level_set_count as f64 / n2),
        full_area_ratio: series(&|s| s.full_size as f64 / n2),
        identity_violations: samples.iter().filter(|s| !s.identity_holds).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Domain, DomainKind, SiteCoord};
    use std::sync::Arc;

    fn slab(n: usize) -> Arc<Domain> {
        Arc::new(Domain::new(DomainKind::SlabBox, n, 3).unwrap())
    }

    fn flat(d: &Arc<Domain>) -> Vec<Plaquette> {
        (0..d.n_edges()).map(|e| d.plaquette(e)).filter(|p| p.level() == Some(0)).collect()
    }

    /// Lifts the cells in `cells` to height 1 with vertical sides.
    fn bumped(d: &Arc<Domain>, cells: &[Cell]) -> InterfaceSet {
        let set: HashSet<Cell> = cells.iter().copied().collect();
        let mut ps: Vec<Plaquette> = flat(d).into_iter().filter(|p| !set.contains(&p.cell().unwrap())).collect();
        for &(i, j) in cells {
            ps.push(Plaquette { lo: SiteCoord::new(i, j, 0), axis: Axis::Z });
            for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                if set.contains(&(i + di, j + dj)) {
                    continue;
                }
                let s = SiteCoord::new(i, j, 0);
                let t = SiteCoord::new(i + di, j + dj, 0);
                ps.push(Plaquette::of_edge(s, t).unwrap());
            }
        }
        InterfaceSet::from_plaquettes(InterfaceLabel::Full, d.clone(), &ps).unwrap()
    }

    #[test]
    fn flat_has_one_ceiling() {
        let d = slab(4);
        let i = InterfaceSet::from_plaquettes(InterfaceLabel::Full, d.clone(), &flat(&d)).unwrap();
        assert_eq!(star_augment(&i).len(), 16);
        let (walls, ceil) = decompose_walls(&i).unwrap();
        assert!(walls.is_empty());
        assert_eq!(ceil.ceilings.len(), 1);
        assert_eq!(ceil.ceilings[0].height, 0);
    }

    #[test]
    fn unit_bump() {
        let d = slab(5);
        let i = bumped(&d, &[(0, 0)]);
        assert_eq!(i.len(), 25 + 4);
        let star = star_augment(&i);
        assert!(star.contains(&Plaquette { lo: SiteCoord::new(0, 0, -1), axis: Axis::Z }));
        let (walls, ceil) = decompose_walls(&i).unwrap();
        assert_eq!(walls.len(), 1);
        let w = &walls[0];
        assert_eq!((w.a.len(), w.b.len()), (9, 5));
        assert_eq!(w.projection_cells().len(), 5);
        assert_eq!(w.excess_area(), 4);
        assert_eq!(ceil.n_plaquettes(), 25 - 5);
        assert_eq!(outermost_walls(&walls), vec![0]);
        assert!(!w.touches_lateral);
    }

    #[test]
    fn ring_encloses_bump() {
        let d = slab(14);
        let mut ring = Vec::new();
        for t in -5..=4 {
            for c in [(t, -5), (t, 4), (-5, t), (4, t)] {
                if !ring.contains(&c) {
                    ring.push(c);
                }
            }
        }
        let mut cells = ring.clone();
        cells.push((0, 0));
        let i = bumped(&d, &cells);
        let (walls, _) = decompose_walls(&i).unwrap();
        assert_eq!(walls.len(), 2);
        let outer = outermost_walls(&walls);
        assert_eq!(outer.len(), 1);
        let big = &walls[outer[0]];
        assert!(big.projection_cells().len() > 20);
        assert_eq!(big.hull_area(), 12 * 12 - 4);
        let total: i64 = walls.iter().map(Wall::excess_area).sum();
        assert_eq!(total, i.len() as i64 - 196);
    }
}
