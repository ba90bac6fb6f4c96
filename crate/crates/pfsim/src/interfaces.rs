//! Potts and FK interfaces, their augmented vertex regions, column heights,
//! the interface order, the lift `Θ_j` and the spike map.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Axis, Color, Domain, Plaquette, SiteCoord, BLUE, CLASS_BLUE, CLASS_RED, RED};
use crate::potts_sampler::SpinConfig;
use crate::rc_coupling::{check_disconnection, cluster_labeling, EdgeConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InterfaceLabel {
    Blue,
    Red,
    Top,
    Bot,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegionTag {
    VBlue,
    VHatBlue,
    VRed,
    VHatRed,
    VTop,
    VHatTop,
    VBot,
    VHatBot,
}

impl RegionTag {
    fn hat(self) -> RegionTag {
        match self {
            RegionTag::VBlue | RegionTag::VHatBlue => RegionTag::VHatBlue,
            RegionTag::VRed | RegionTag::VHatRed => RegionTag::VHatRed,
            RegionTag::VTop | RegionTag::VHatTop => RegionTag::VHatTop,
            RegionTag::VBot | RegionTag::VHatBot => RegionTag::VHatBot,
        }
    }

    fn label(self) -> InterfaceLabel {
        match self {
            RegionTag::VBlue | RegionTag::VHatBlue => InterfaceLabel::Blue,
            RegionTag::VRed | RegionTag::VHatRed => InterfaceLabel::Red,
            RegionTag::VTop | RegionTag::VHatTop => InterfaceLabel::Top,
            RegionTag::VBot | RegionTag::VHatBot => InterfaceLabel::Bot,
        }
    }
}

/// A set of sites over the extended index range (interior then boundary).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexRegion {
    pub tag: RegionTag,
    members: Vec<bool>,
}

impl VertexRegion {
    pub fn contains(&self, ext: usize) -> bool {
        self.members[ext]
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.contains(&true)
    }

    pub fn is_subset(&self, other: &VertexRegion) -> bool {
        self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint(&self, other: &VertexRegion) -> bool {
        self.members.iter().zip(&other.members).all(|(&a, &b)| !(a && b))
    }
}

/// Component of `color` sites reached from the boundary sites of that colour,
/// all of which are treated as joined through the exterior.
pub fn potts_region(sigma: &SpinConfig, color: Color) -> VertexRegion {
    let sys = sigma.system();
    let d = sys.domain();
    let n_int = d.n_interior();
    let mut members = vec![false; d.sites().len()];
    for b in 0..d.n_boundary() {
        members[n_int + b] = sys.boundary_color_at(b) == color;
    }
    let mut queue = VecDeque::new();
    for v in 0..n_int {
        if sigma.color(v) == color && d.neighbors(v).iter().any(|&u| u as usize >= n_int && members[u as usize]) {
            members[v] = true;
            queue.push_back(v);
        }
    }
    flood(d, &mut members, &mut queue, |u| sigma.color(u) == color);
    let tag = if color == BLUE { RegionTag::VBlue } else { RegionTag::VRed };
    VertexRegion { tag, members }
}

/// Open cluster of the red (top) or blue (bottom) boundary class.
pub fn fk_region(omega: &EdgeConfig, label: InterfaceLabel) -> Result<VertexRegion> {
    let sys = omega.system();
    let (class, color, tag) = match label {
        InterfaceLabel::Top => (CLASS_RED, RED, RegionTag::VTop),
        InterfaceLabel::Bot => (CLASS_BLUE, BLUE, RegionTag::VBot),
        other => return Err(Error::Param(format!("{other:?} is not an FK interface"))),
    };
    if class as usize >= sys.n_classes() {
        return Err(Error::Precondition("boundary condition has no blue class".into()));
    }
    if !check_disconnection(omega) {
        return Err(Error::DisconnectionViolated);
    }
    let lab = cluster_labeling(omega);
    let target = lab.class_labels[class as usize];
    let d = sys.domain();
    let mut members: Vec<bool> = lab.labels.iter().map(|&l| l == target).collect();
    members.extend((0..d.n_boundary()).map(|b| sys.boundary_color_at(b) == color));
    Ok(VertexRegion { tag, members })
}

fn flood(d: &Domain, members: &mut [bool], queue: &mut VecDeque<usize>, admit: impl Fn(usize) -> bool) {
    let n_int = d.n_interior();
    while let Some(v) = queue.pop_front() {
        for &u in d.neighbors(v) {
            let u = u as usize;
            if u < n_int && !members[u] && admit(u) {
                members[u] = true;
                queue.push_back(u);
            }
        }
    }
}

/// Adds every complement component that cannot reach the exterior.
pub fn augment(d: &Domain, region: &VertexRegion) -> VertexRegion {
    let n_int = d.n_interior();
    let mut outside = vec![false; n_int];
    let mut queue = VecDeque::new();
    for v in 0..n_int {
        if !region.members[v]
            && d.neighbors(v).iter().any(|&u| u as usize >= n_int && !region.members[u as usize])
        {
            outside[v] = true;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in d.neighbors(v) {
            let u = u as usize;
            if u < n_int && !outside[u] && !region.members[u] {
                outside[u] = true;
                queue.push_back(u);
            }
        }
    }
    let mut members = region.members.clone();
    for v in 0..n_int {
        if !outside[v] {
            members[v] = true;
        }
    }
    VertexRegion {
        tag: region.tag.hat(),
        members,
    }
}

/// A set of domain plaquettes, stored as sorted edge ids.
#[derive(Clone, Debug)]
pub struct InterfaceSet {
    label: InterfaceLabel,
    domain: Arc<Domain>,
    edges: Vec<u32>,
    region: Option<VertexRegion>,
}

impl PartialEq for InterfaceSet {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && Arc::ptr_eq(&self.domain, &other.domain) && self.edges == other.edges
    }
}

impl InterfaceSet {
    pub fn from_edges(label: InterfaceLabel, domain: Arc<Domain>, mut edges: Vec<u32>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        InterfaceSet {
            label,
            domain,
            edges,
            region: None,
        }
    }

    pub fn from_plaquettes(label: InterfaceLabel, domain: Arc<Domain>, ps: &[Plaquette]) -> Result<Self> {
        let edges = ps
            .iter()
            .map(|&p| {
                domain
                    .edge_of_plaquette(p)
                    .map(|e| e as u32)
                    .ok_or_else(|| Error::Geometry(format!("{p:?} is not a plaquette of the domain")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InterfaceSet::from_edges(label, domain, edges))
    }

    pub fn label(&self) -> InterfaceLabel {
        self.label
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[u32] {
        &self.edges
    }

    pub fn contains_edge(&self, e: usize) -> bool {
        self.edges.binary_search(&(e as u32)).is_ok()
    }

    pub fn contains(&self, p: Plaquette) -> bool {
        self.domain.edge_of_plaquette(p).is_some_and(|e| self.contains_edge(e))
    }

    pub fn plaquettes(&self) -> Vec<Plaquette> {
        self.edges.iter().map(|&e| self.domain.plaquette(e as usize)).collect()
    }

    /// The augmented region the interface bounds, for Potts and FK labels.
    pub fn region(&self) -> Option<&VertexRegion> {
        self.region.as_ref()
    }

    pub fn is_subset(&self, other: &InterfaceSet) -> bool {
        self.edges.iter().all(|&e| other.contains_edge(e as usize))
    }

    /// Per-column maximum and minimum heights of horizontal plaquettes, row-major;
    /// `None` where the interface misses the column.
    pub fn height_maps(&self) -> (Vec<Option<i32>>, Vec<Option<i32>>) {
        let n = self.domain.n();
        let mut hi = vec![None; n * n];
        let mut lo = vec![None; n * n];
        for p in self.plaquettes() {
            if let (Some((i, j)), Some(h)) = (p.cell(), p.level()) {
                if let Some(c) = self.domain.column_index(i, j) {
                    hi[c] = Some(hi[c].map_or(h, |x: i32| x.max(h)));
                    lo[c] = Some(lo[c].map_or(h, |x: i32| x.min(h)));
                }
            }
        }
        (hi, lo)
    }

    pub fn column_max(&self, i: i32, j: i32) -> Option<i32> {
        let c = self.domain.column_index(i, j)?;
        self.height_maps().0[c]
    }

    pub fn column_min(&self, i: i32, j: i32) -> Option<i32> {
        let c = self.domain.column_index(i, j)?;
        self.height_maps().1[c]
    }

    /// `max_x overline-hgt_x`, over columns the interface reaches.
    pub fn max_column_height(&self) -> Option<i32> {
        self.height_maps().0.into_iter().flatten().max()
    }

    /// Largest plaquette height in doubled units.
    pub fn max_height2(&self) -> Option<i32> {
        self.plaquettes().iter().map(|p| p.height2()).max()
    }

    pub fn min_height2(&self) -> Option<i32> {
        self.plaquettes().iter().map(|p| p.height2()).min()
    }
}

fn interface_from_region(d: &Arc<Domain>, vhat: VertexRegion) -> InterfaceSet {
    let edges = d
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, ed)| vhat.members[ed.lo as usize] != vhat.members[ed.hi as usize])
        .map(|(e, _)| e as u32)
        .collect();
    InterfaceSet {
        label: vhat.tag.label(),
        domain: d.clone(),
        edges,
        region: Some(vhat),
    }
}

pub fn extract_potts_interface(sigma: &SpinConfig, color: Color) -> Result<InterfaceSet> {
    let sys = sigma.system();
    if color != BLUE && color != RED {
        return Err(Error::Param(format!("interfaces exist for blue and red only, got colour {color}")));
    }
    if !sys.boundary_colors().contains(&color) {
        return Err(Error::Precondition(format!("boundary has no sites of colour {color}")));
    }
    let d = sys.domain();
    Ok(interface_from_region(d, augment(d, &potts_region(sigma, color))))
}

pub fn extract_fk_interface(omega: &EdgeConfig, label: InterfaceLabel) -> Result<InterfaceSet> {
    let region = fk_region(omega, label)?;
    let d = omega.system().domain();
    Ok(interface_from_region(d, augment(d, &region)))
}

/// Closed plaquettes 1-connected to the red/blue boundary seam.
pub fn extract_full_interface(omega: &EdgeConfig) -> Result<InterfaceSet> {
    let sys = omega.system();
    if sys.n_classes() < 2 {
        return Err(Error::Precondition("full interface needs red and blue boundary classes".into()));
    }
    if !check_disconnection(omega) {
        return Err(Error::DisconnectionViolated);
    }
    let d = sys.domain();
    let mut seen = vec![false; d.n_edges()];
    let mut queue = VecDeque::new();
    for &e in sys.full_interface_seeds() {
        let e = e as usize;
        if !omega.is_open(e) && !seen[e] {
            seen[e] = true;
            queue.push_back(e);
        }
    }
    while let Some(e) = queue.pop_front() {
        for &f in d.plaquette_neighbors(e) {
            let f = f as usize;
            if !seen[f] && !omega.is_open(f) {
                seen[f] = true;
                queue.push_back(f);
            }
        }
    }
    let edges = (0..d.n_edges()).filter(|&e| seen[e]).map(|e| e as u32).collect();
    Ok(InterfaceSet::from_edges(InterfaceLabel::Full, d.clone(), edges))
}

/// The five interfaces of one coupled configuration.
#[derive(Clone, Debug)]
pub struct CoupledInterfaces {
    pub top: InterfaceSet,
    pub red: InterfaceSet,
    pub blue: InterfaceSet,
    pub bot: InterfaceSet,
    pub full: InterfaceSet,
}

pub fn extract_all(sigma: &SpinConfig, omega: &EdgeConfig) -> Result<CoupledInterfaces> {
    Ok(CoupledInterfaces {
        top: extract_fk_interface(omega, InterfaceLabel::Top)?,
        red: extract_potts_interface(sigma, RED)?,
        blue: extract_potts_interface(sigma, BLUE)?,
        bot: extract_fk_interface(omega, InterfaceLabel::Bot)?,
        full: extract_full_interface(omega)?,
    })
}

/// `I_top ⪰ I_red ⪰ I_blue ⪰ I_bot` in vertex-set form.
pub fn verify_ordering(
    top: &InterfaceSet,
    red: &InterfaceSet,
    blue: &InterfaceSet,
    bot: &InterfaceSet,
) -> Result<bool> {
    let get = |i: &InterfaceSet, want: InterfaceLabel| -> Result<VertexRegion> {
        if i.label != want {
            return Err(Error::Param(format!("expected a {want:?} interface, got {:?}", i.label)));
        }
        i.region
            .clone()
            .ok_or_else(|| Error::Param(format!("{want:?} interface carries no vertex region")))
    };
    let (t, r, b, o) = (
        get(top, InterfaceLabel::Top)?,
        get(red, InterfaceLabel::Red)?,
        get(blue, InterfaceLabel::Blue)?,
        get(bot, InterfaceLabel::Bot)?,
    );
    if t.members.len() != r.members.len() || b.members.len() != o.members.len() || t.members.len() != b.members.len() {
        return Err(Error::Param("interfaces come from different domains".into()));
    }
    Ok(o.is_subset(&b) && t.is_subset(&r) && r.is_disjoint(&b))
}

/// The event that the blue interface lies in the closed upper half-space,
/// equivalently that every site below height 0 is in the augmented blue region.
pub fn blue_above_floor(sigma: &SpinConfig) -> bool {
    let d = sigma.system().domain();
    let vhat = augment(d, &potts_region(sigma, BLUE));
    d.interior_sites()
        .iter()
        .enumerate()
        .all(|(v, s)| s.k >= 0 || vhat.members[v])
}

/// Lateral boundary plaquettes at layers `0..j`.
fn lateral_band(d: &Domain, j: i32) -> Result<Vec<u32>> {
    let lo = d.foot_lo();
    let hi = lo + d.n() as i32 - 1;
    let mut out = Vec::with_capacity(4 * d.n() * j as usize);
    for k in 0..j {
        for t in lo..=hi {
            for (s, nb) in [
                (SiteCoord::new(lo, t, k), SiteCoord::new(lo - 1, t, k)),
                (SiteCoord::new(hi, t, k), SiteCoord::new(hi + 1, t, k)),
                (SiteCoord::new(t, lo, k), SiteCoord::new(t, lo - 1, k)),
                (SiteCoord::new(t, hi, k), SiteCoord::new(t, hi + 1, k)),
            ] {
                let e = d
                    .edge_between(s, nb)?
                    .ok_or_else(|| Error::Precondition(format!("layer {k} lies outside the domain")))?;
                out.push(e as u32);
            }
        }
    }
    Ok(out)
}

/// Shifts a top interface up by `j` and adds the `4jn` lateral boundary
/// plaquettes of heights in `[0, j]`.
pub fn theta_shift(interface: &InterfaceSet, j: u32, domain: &Arc<Domain>) -> Result<InterfaceSet> {
    if !Arc::ptr_eq(interface.domain(), domain) && interface.domain().sites() != domain.sites() {
        return Err(Error::Param("interface belongs to a different domain".into()));
    }
    if interface.min_height2().is_some_and(|h| h < 0) {
        return Err(Error::Precondition("interface dips below height 0".into()));
    }
    if j == 0 {
        return Ok(InterfaceSet::from_edges(interface.label, domain.clone(), interface.edges.clone()));
    }
    let j = j as i32;
    let mut edges = Vec::with_capacity(interface.len() + 4 * j as usize * domain.n());
    for p in interface.plaquettes() {
        let t = p.translate(0, 0, j);
        let e = domain
            .edge_of_plaquette(t)
            .ok_or_else(|| Error::Precondition(format!("shift by {j} overflows the ceiling at {t:?}")))?;
        edges.push(e as u32);
    }
    edges.extend(lateral_band(domain, j)?);
    Ok(InterfaceSet::from_edges(interface.label, domain.clone(), edges))
}

/// For each column in `columns`, grows `V_top` downward by `h` sites below
/// the lowest top-interface plaquette, sheathing the spike in closed edges.
pub fn spike_transform(omega: &EdgeConfig, columns: &[(i32, i32)], h: u32) -> Result<EdgeConfig> {
    if columns.is_empty() || h == 0 {
        return Ok(omega.clone());
    }
    let top_region = fk_region(omega, InterfaceLabel::Top)?;
    let top = extract_fk_interface(omega, InterfaceLabel::Top)?;
    let (_, lows) = top.height_maps();
    let d = omega.system().domain().clone();
    let distinct: BTreeSet<(i32, i32)> = columns.iter().copied().collect();
    let mut out = omega.clone();
    let h = h as i32;
    for (i, j) in distinct {
        let c = d
            .column_index(i, j)
            .ok_or_else(|| Error::Precondition(format!("column ({i}, {j}) is outside the footprint")))?;
        let u = lows[c].ok_or_else(|| Error::Precondition(format!("top interface misses column ({i}, {j})")))?;
        let v0 = SiteCoord::new(i, j, u);
        let v0_idx = d
            .site_index(v0)
            .ok_or_else(|| Error::Precondition(format!("column ({i}, {j}) has no site above its interface")))?;
        if !top_region.contains(v0_idx as usize) {
            return Err(Error::Precondition(format!("{v0:?} is not in the top cluster")));
        }
        for t in 1..=h {
            let vt = SiteCoord::new(i, j, u - t);
            if !d.is_interior(vt) {
                return Err(Error::Precondition(format!("column ({i}, {j}) is blocked at depth {t}")));
            }
            let up = d.edge_between(vt, vt.step(Axis::Z, 1))?.expect("interior site edge");
            out.set(up, true);
            for (axis, delta) in [(Axis::X, -1), (Axis::X, 1), (Axis::Y, -1), (Axis::Y, 1)] {
                let e = d.edge_between(vt, vt.step(axis, delta))?.expect("interior site edge");
                out.set(e, false);
            }
        }
        let vh = SiteCoord::new(i, j, u - h);
        let down = d.edge_between(vh, vh.step(Axis::Z, -1))?.expect("interior site edge");
        out.set(down, false);
    }
    if !check_disconnection(&out) {
        return Err(Error::DisconnectionViolated);
    }
    Ok(out)
}
