//! Exact checks on tiny domains and their JSON report.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::fuzzy::{require_certified, BlueEvent, EventRegistry, Measurability};
use crate::interfaces::{blue_above_floor, theta_shift, InterfaceLabel, InterfaceSet};
use crate::lattice::{Axis, BoundaryCondition, DomainKind, ModelParams, Plaquette, SiteCoord, System, BLUE};

use super::exact::{coupling_pushforward, enumerate_fk_graph, enumerate_potts, enumerate_potts_pinned, total_variation, ENUMERATION_CAP};
use super::frontier::{partition_polynomial, Constraints, Polynomial};
use super::graph::{End, FkGraph};
use super::quadrature::integrate;

pub const SUITES: [&str; 5] = ["coupling", "free-energy", "xi-ratio", "monotonicity", "fkg"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn of(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub inputs: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub beta: f64,
    /// Constant `C` in the lower bound `Ξ^dob ≥ exp(−4(β+C)jn)`.
    pub xi_constant: f64,
    pub quadrature_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            beta: 1.0,
            xi_constant: 1.0,
            quadrature_tol: 1e-9,
        }
    }
}

fn system(kind: DomainKind, n: usize, m: usize, bc: BoundaryCondition) -> Result<Arc<System>> {
    System::build(kind, n, m, bc)
}

// ---------------------------------------------------------------- coupling

/// Total variation between the coloured conditioned random-cluster measure and the Potts measure.
pub fn coupling_check(system: &Arc<System>, params: &ModelParams) -> Result<f64> {
    let push = coupling_pushforward(system, params)?;
    let exact = enumerate_potts(system, params)?.potts_law();
    Ok(total_variation(&push, &exact))
}

// ------------------------------------------------------------- free energy

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FreeEnergyCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub discrepancy: f64,
}

/// Coefficients of the partition function in the marked-bond odds, by enumeration.
pub fn marked_polynomial(graph: &FkGraph) -> Result<Polynomial> {
    if graph.state_count() > ENUMERATION_CAP {
        return Err(Error::TooLarge {
            states: graph.state_count(),
            cap: ENUMERATION_CAP,
        });
    }
    let mut c = vec![0.0; graph.n_tilde() + 1];
    let mut uf = graph.union_find();
    for mask in 0..1u64 << graph.n_bonds() {
        let w = graph.weight(mask, 1.0, &mut uf);
        if w > 0.0 {
            c[graph.bond_weight(mask).1] += w;
        }
    }
    Ok(Polynomial(c))
}

/// `log Z(θ₁) − log Z(θ₀)` against the integral of the summed marked-bond
/// marginals over `θ(1−θ)`. Enumerable graphs use two direct enumerations
/// for the left side; larger ones use frontier sums in two orders.
pub fn free_energy_identity_check(graph: &FkGraph, theta0: f64, theta1: f64, tol: f64) -> Result<FreeEnergyCheck> {
    if !(0.0 < theta0 && theta0 < theta1 && theta1 < 1.0) {
        return Err(Error::Param(format!("need 0 < θ₀ < θ₁ < 1, got {theta0}, {theta1}")));
    }
    let odds = |t: f64| t / (1.0 - t);
    let (lhs, poly) = if graph.state_count() <= ENUMERATION_CAP {
        let z0 = enumerate_fk_graph(graph, odds(theta0))?.z();
        let z1 = enumerate_fk_graph(graph, odds(theta1))?.z();
        (z1.ln() - z0.ln(), marked_polynomial(graph)?)
    } else {
        let rev: Vec<usize> = (0..graph.n_vertices).rev().collect();
        let (a, _) = partition_polynomial(graph, &Constraints::default(), Some(&rev))?;
        let (b, _) = partition_polynomial(graph, &Constraints::default(), None)?;
        (a.eval_odds(odds(theta1)).ln() - a.eval_odds(odds(theta0)).ln(), b)
    };
    let rhs = if graph.n_tilde() == 0 {
        0.0
    } else {
        integrate(|t| poly.mean_open(t) / (t * (1.0 - t)), theta0, theta1, tol).value
    };
    Ok(FreeEnergyCheck {
        lhs,
        rhs,
        discrepancy: (lhs - rhs).abs(),
    })
}

// ---------------------------------------------------------------- xi ratio

/// The event `{I_top = I}` as constraints: the edges dual to `I` closed,
/// and every site just above `I` joined to the red class.
#[derive(Clone, Debug, PartialEq)]
pub struct TopEvent {
    pub closed: Vec<bool>,
    pub must_red: Vec<bool>,
    /// Interior sites below `I`.
    pub below: Vec<bool>,
}

/// Sites above `I` are those reached from the red boundary without crossing `I`.
pub fn top_event(system: &System, interface: &InterfaceSet) -> Result<TopEvent> {
    let d = system.domain();
    let n_int = d.n_interior();
    let mut closed = vec![false; d.n_edges()];
    for &e in interface.edges() {
        closed[e as usize] = true;
    }
    let red_boundary = |b: usize| system.class_of(b) == 0;
    let mut above = vec![false; d.sites().len()];
    for b in 0..d.n_boundary() {
        above[n_int + b] = red_boundary(b);
    }
    let mut changed = true;
    while changed {
        changed = false;
        for (id, e) in d.edges().iter().enumerate() {
            if closed[id] {
                continue;
            }
            let (a, b) = (e.lo as usize, e.hi as usize);
            for (x, y) in [(a, b), (b, a)] {
                if above[x] && !above[y] {
                    if y >= n_int {
                        return Err(Error::Precondition("interface does not separate the boundary classes".into()));
                    }
                    above[y] = true;
                    changed = true;
                }
            }
        }
    }
    let mut must_red = vec![false; n_int];
    for &e in interface.edges() {
        let edge = d.edges()[e as usize];
        let (a, b) = (edge.lo as usize, edge.hi as usize);
        if above[a] == above[b] {
            return Err(Error::Precondition(format!("plaquette {:?} does not bound the region above", d.plaquette(e as usize))));
        }
        for x in [a, b] {
            if above[x] && x < n_int {
                must_red[x] = true;
            }
        }
    }
    Ok(TopEvent {
        closed,
        must_red,
        below: (0..n_int).map(|v| !above[v]).collect(),
    })
}

/// Unnormalised weight of `{I_top = I}` under the conditioned random-cluster measure.
pub fn top_event_weight(system: &System, params: &ModelParams, event: &TopEvent, reversed: bool) -> Result<f64> {
    let g = FkGraph::from_system_closing(system, params, true, true, &event.closed);
    let order: Option<Vec<usize>> = reversed.then(|| (0..g.n_vertices).rev().collect());
    let constraints = Constraints {
        must_red: event.must_red.clone(),
    };
    Ok(partition_polynomial(&g, &constraints, order.as_deref())?.0.total())
}

/// The graph below `I` in a slab: free except for wiring to the blue
/// boundary below height 0, with a marked bond from every site at height −½
/// to that boundary.
pub fn below_graph(system: &System, params: &ModelParams, event: &TopEvent) -> FkGraph {
    let d = system.domain();
    let n_int = d.n_interior();
    let mut index = vec![usize::MAX; n_int];
    let mut nv = 0;
    for v in 0..n_int {
        if event.below[v] {
            index[v] = nv;
            nv += 1;
        }
    }
    let r = params.odds();
    let mut g = FkGraph::new(nv, 1, params.q as f64, false);
    let mut wired = vec![0usize; nv];
    for (id, e) in d.edges().iter().enumerate() {
        if event.closed[id] {
            continue;
        }
        let (a, b) = (e.lo as usize, e.hi as usize);
        let (v, w) = if a < n_int { (a, b) } else { (b, a) };
        if !event.below[v] {
            continue;
        }
        if w < n_int {
            if event.below[w] {
                g.add_bond(index[v], End::Vertex(index[w]), r);
            }
        } else if d.site(w).k < 0 {
            wired[index[v]] += 1;
        }
    }
    for (v, &k) in wired.iter().enumerate() {
        if k > 0 {
            g.add_bond(v, End::Class(0), super::graph::lumped_odds(r, k));
        }
    }
    for v in 0..n_int {
        if event.below[v] && d.site(v).k == -1 {
            g.add_tilde_bond(index[v], End::Class(0));
        }
    }
    g
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XiRatios {
    pub fl: f64,
    pub dob: f64,
    /// Both ratios recomputed with the reverse processing order.
    pub fl_reversed: f64,
    pub dob_reversed: f64,
    /// `exp(−4(β+C)jn)`.
    pub lower_bound: f64,
    /// `log Ξ^fl − log Ξ^dob` from the graphs below the two interfaces.
    pub log_gap_below: f64,
    /// The same gap as an integral of marked-bond marginal differences.
    pub log_gap_integral: f64,
    /// Smallest value of the integrand on a grid; non-negative by FKG.
    pub min_integrand: f64,
}

/// Exact `Ξ_j(I)` under the floor and Dobrushin measures for a top
/// interface `I` at heights `≥ 0`, given by its plaquettes.
pub fn xi_ratio_check(n: usize, m: usize, params: &ModelParams, plaquettes: &[Plaquette], j: u32, xi_constant: f64, tol: f64) -> Result<XiRatios> {
    if j == 0 || j as usize > n / 2 {
        return Err(Error::Precondition(format!("need 1 ≤ j ≤ n/2, got j = {j}, n = {n}")));
    }
    let fl_sys = system(DomainKind::FloorBox, n, m, BoundaryCondition::Floor)?;
    let dob_sys = system(DomainKind::SlabBox, n, m, BoundaryCondition::dobrushin())?;
    let fl_i = InterfaceSet::from_plaquettes(InterfaceLabel::Top, fl_sys.domain().clone(), plaquettes)?;
    let dob_i = InterfaceSet::from_plaquettes(InterfaceLabel::Top, dob_sys.domain().clone(), plaquettes)?;
    let max_h = fl_i.max_column_height().unwrap_or(0);
    if max_h >= j as i32 {
        return Err(Error::Precondition(format!("max column height {max_h} is not below j = {j}")));
    }
    let fl_t = theta_shift(&fl_i, j, fl_sys.domain())?;
    let dob_t = theta_shift(&dob_i, j, dob_sys.domain())?;
    let events = [
        top_event(&fl_sys, &fl_i)?,
        top_event(&fl_sys, &fl_t)?,
        top_event(&dob_sys, &dob_i)?,
        top_event(&dob_sys, &dob_t)?,
    ];
    let systems = [&fl_sys, &fl_sys, &dob_sys, &dob_sys];
    let weights: Vec<[f64; 2]> = crate::par::map_indexed(4, |i| {
        [false, true].map(|rev| top_event_weight(systems[i], params, &events[i], rev))
    })
    .into_iter()
    .map(|[a, b]| Ok([a?, b?]))
    .collect::<Result<_>>()?;
    if weights.iter().any(|w| w[0] <= 0.0) {
        return Err(Error::Precondition("interface not realisable with positive probability".into()));
    }

    let below_i = below_graph(&dob_sys, params, &events[2]);
    let below_t = below_graph(&dob_sys, params, &events[3]);
    let (poly_i, _) = partition_polynomial(&below_i, &Constraints::default(), None)?;
    let (poly_t, _) = partition_polynomial(&below_t, &Constraints::default(), None)?;
    let endpoints = |p: &Polynomial| p.eval_prob(1.0).ln() - p.eval_prob(0.0).ln();
    let integrand = |t: f64| (poly_t.mean_open(t) - poly_i.mean_open(t)) / (t * (1.0 - t));
    let min_integrand = (1..100).map(|i| integrand(i as f64 / 100.0)).fold(f64::INFINITY, f64::min);

    Ok(XiRatios {
        fl: weights[1][0] / weights[0][0],
        dob: weights[3][0] / weights[2][0],
        fl_reversed: weights[1][1] / weights[0][1],
        dob_reversed: weights[3][1] / weights[2][1],
        lower_bound: (-4.0 * (params.beta + xi_constant) * j as f64 * n as f64).exp(),
        log_gap_below: endpoints(&poly_t) - endpoints(&poly_i),
        log_gap_integral: integrate(integrand, 0.0, 1.0, tol).value,
        min_integrand,
    })
}

/// The flat interface at height 0 over an `n × n` footprint.
pub fn flat_plaquettes(n: usize) -> Vec<Plaquette> {
    let lo = -((n / 2) as i32);
    let mut out = Vec::new();
    for j in lo..lo + n as i32 {
        for i in lo..lo + n as i32 {
            out.push(Plaquette {
                lo: SiteCoord::new(i, j, -1),
                axis: Axis::Z,
            });
        }
    }
    out
}

// ------------------------------------------------------------ monotonicity

/// `(μ^fl(A), μ̂^h(A))` on the slab of half-height `m`. The floor measure
/// is the slab measure with every site below height 0 held blue.
pub fn monotonicity_check(n: usize, m: usize, h: i32, params: &ModelParams, event: &BlueEvent) -> Result<(f64, f64)> {
    let fl = system(DomainKind::SlabBox, n, m, BoundaryCondition::dobrushin())?;
    let soft = system(DomainKind::SlabBox, n, m, BoundaryCondition::Split { h })?;
    for s in [&fl, &soft] {
        require_certified(event, s, params.q, Measurability::VhatBlueComplement)?;
    }
    let pins: Vec<(usize, u8)> = fl
        .domain()
        .interior_sites()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.k < 0)
        .map(|(v, _)| (v, BLUE))
        .collect();
    let mu_fl = enumerate_potts_pinned(&fl, params, &pins)?.probability(|s| event.eval(s));
    let mu_hat = enumerate_potts(&soft, params)?.condition(blue_above_floor)?.probability(|s| event.eval(s));
    Ok((mu_fl, mu_hat))
}

// --------------------------------------------------------------------- fkg

/// `(φ(A ∩ B), φ(A)φ(B))` under the blue projection of the Potts measure.
pub fn fkg_check(system: &Arc<System>, params: &ModelParams, a: &BlueEvent, b: &BlueEvent) -> Result<(f64, f64)> {
    for e in [a, b] {
        require_certified(e, system, params.q, Measurability::Fuzzy)?;
    }
    let mu = enumerate_potts(system, params)?;
    let pa = mu.probability(|s| a.eval(s));
    let pb = mu.probability(|s| b.eval(s));
    let pab = mu.probability(|s| a.eval(s) && b.eval(s));
    Ok((pab, pa * pb))
}

// ------------------------------------------------------------------ suites

fn record(name: impl Into<String>, inputs: serde_json::Value, lhs: f64, rhs: f64, ok: bool) -> CheckRecord {
    CheckRecord {
        name: name.into(),
        inputs,
        lhs,
        rhs,
        verdict: Verdict::of(ok),
    }
}

pub fn run_suite(name: &str, cfg: &OracleConfig) -> Result<Report> {
    let checks = match name {
        "coupling" => coupling_suite(cfg)?,
        "free-energy" => free_energy_suite(cfg)?,
        "xi-ratio" => xi_suite(cfg)?,
        "monotonicity" => monotonicity_suite(cfg)?,
        "fkg" => fkg_suite(cfg)?,
        other => {
            return Err(Error::Param(format!("unknown suite `{other}`; available: {}", SUITES.join(", "))));
        }
    };
    Ok(Report {
        suite: name.into(),
        checks,
    })
}

fn coupling_suite(cfg: &OracleConfig) -> Result<Vec<CheckRecord>> {
    let mut cases = Vec::new();
    for m in [1, 2] {
        for q in [2, 3] {
            for beta in [0.7, 1.2] {
                cases.push((DomainKind::FloorBox, m, BoundaryCondition::Floor, q, beta));
            }
        }
    }
    cases.push((DomainKind::SlabBox, 1, BoundaryCondition::dobrushin(), 2, cfg.beta));
    cases
        .iter()
        .map(|&(kind, m, bc, q, beta)| {
            let params = ModelParams::new(q, beta)?;
            let tv = coupling_check(&system(kind, 2, m, bc)?, &params)?;
            Ok(record(
                "coupling_tv",
                json!({"kind": kind, "n": 2, "m": m, "bc": bc, "q": q, "beta": beta}),
                tv,
                1e-10,
                tv < 1e-10,
            ))
        })
        .collect()
}

/// The graphs of the free-energy test matrix, with their names.
pub fn free_energy_graphs(beta: f64) -> Result<Vec<(String, FkGraph)>> {
    let params = ModelParams::new(2, beta)?;
    let mut out = Vec::new();

    let box_sys = system(DomainKind::FloorBox, 2, 1, BoundaryCondition::Floor)?;
    out.push(("box_no_marked".into(), FkGraph::from_system(&box_sys, &params, true, true)));

    let mut edge = FkGraph::new(2, 0, 2.0, false);
    edge.add_tilde_bond(0, End::Vertex(1));
    out.push(("single_edge".into(), edge));

    let mut anchored = FkGraph::from_system(&box_sys, &params, true, true);
    anchored.add_tilde_bond(0, End::Class(1));
    anchored.add_tilde_bond(3, End::Class(1));
    out.push(("box_floor_anchors".into(), anchored));

    let slab = system(DomainKind::SlabBox, 2, 1, BoundaryCondition::dobrushin())?;
    let flat = InterfaceSet::from_plaquettes(InterfaceLabel::Top, slab.domain().clone(), &flat_plaquettes(2))?;
    out.push(("below_flat".into(), below_graph(&slab, &params, &top_event(&slab, &flat)?)));
    Ok(out)
}

fn free_energy_suite(cfg: &OracleConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for (name, g) in free_energy_graphs(cfg.beta)? {
        for (t0, t1) in [(0.2, 0.8), (0.01, 0.99)] {
            let c = free_energy_identity_check(&g, t0, t1, cfg.quadrature_tol)?;
            let bound = if name == "single_edge" { 1e-8 } else { 1e-6 };
            out.push(record(
                format!("free_energy_{name}"),
                json!({"graph": name, "bonds": g.n_bonds(), "marked": g.n_tilde(), "theta0": t0, "theta1": t1, "beta": cfg.beta}),
                c.lhs,
                c.rhs,
                c.discrepancy < bound,
            ));
        }
    }
    Ok(out)
}

fn xi_suite(cfg: &OracleConfig) -> Result<Vec<CheckRecord>> {
    let params = ModelParams::new(2, cfg.beta)?;
    let (n, m, j) = (3, 3, 1);
    let x = xi_ratio_check(n, m, &params, &flat_plaquettes(n), j, cfg.xi_constant, cfg.quadrature_tol)?;
    let inputs = json!({"n": n, "m": m, "q": 2, "beta": cfg.beta, "j": j, "interface": "flat@0", "C": cfg.xi_constant});
    let gap = x.fl.ln() - x.dob.ln();
    Ok(vec![
        record("xi_fl_ge_dob", inputs.clone(), x.fl, x.dob, x.fl >= x.dob && x.dob > 0.0),
        record("xi_dob_lower_bound", inputs.clone(), x.dob, x.lower_bound, x.dob >= x.lower_bound),
        record(
            "xi_order_independence",
            inputs.clone(),
            x.fl / x.fl_reversed,
            x.dob / x.dob_reversed,
            (x.fl / x.fl_reversed - 1.0).abs() < 1e-12 && (x.dob / x.dob_reversed - 1.0).abs() < 1e-12,
        ),
        record("xi_gap_below_graphs", inputs.clone(), gap, x.log_gap_below, (gap - x.log_gap_below).abs() < 1e-9),
        record("xi_gap_integral", inputs.clone(), gap, x.log_gap_integral, (gap - x.log_gap_integral).abs() < 1e-6),
        record("xi_integrand_nonnegative", inputs, x.min_integrand, 0.0, x.min_integrand >= -1e-12),
    ])
}

fn monotonicity_suite(cfg: &OracleConfig) -> Result<Vec<CheckRecord>> {
    let params = ModelParams::new(2, cfg.beta)?;
    let registry = EventRegistry::standard();
    let mut out = Vec::new();
    for h in [0, 1] {
        for e in registry.events() {
            let (fl, hat) = monotonicity_check(2, 1, h, &params, e)?;
            out.push(record(
                format!("monotonicity_{}", e.name),
                json!({"n": 2, "m": 1, "h": h, "q": 2, "beta": cfg.beta, "event": e.name}),
                fl,
                hat,
                fl <= hat + 1e-12,
            ));
        }
    }
    let control = BlueEvent::not_in_vhat_blue(SiteCoord::new(0, 0, 0));
    let rejected = matches!(monotonicity_check(2, 1, 0, &params, &control), Err(Error::Certification { .. }));
    out.push(record(
        "monotonicity_rejects_decreasing",
        json!({"event": control.name}),
        f64::from(u8::from(rejected)),
        1.0,
        rejected,
    ));
    Ok(out)
}

fn fkg_suite(cfg: &OracleConfig) -> Result<Vec<CheckRecord>> {
    let floor = system(DomainKind::FloorBox, 2, 1, BoundaryCondition::Floor)?;
    let mut out = Vec::new();
    let sites: Vec<SiteCoord> = floor.domain().interior_sites().to_vec();
    let p3 = ModelParams::new(3, cfg.beta)?;
    for (a, b) in [(0, 1), (0, 3), (1, 2)] {
        let (ea, eb) = (BlueEvent::site_blue(sites[a]), BlueEvent::site_blue(sites[b]));
        let (joint, product) = fkg_check(&floor, &p3, &ea, &eb)?;
        out.push(record(
            format!("fkg_{}_{}", ea.name, eb.name),
            json!({"n": 2, "m": 1, "bc": "floor", "q": 3, "beta": cfg.beta}),
            joint,
            product,
            joint >= product - 1e-12,
        ));
    }
    let e = BlueEvent::blue_height_at_least(1);
    let (joint, product) = fkg_check(&floor, &p3, &e, &e)?;
    out.push(record("fkg_self", json!({"event": e.name, "q": 3}), joint, product, joint >= product - 1e-12));

    let free = ModelParams::new(2, 0.0)?;
    let (ea, eb) = (BlueEvent::site_blue(sites[0]), BlueEvent::site_blue(sites[3]));
    let (joint, product) = fkg_check(&floor, &free, &ea, &eb)?;
    out.push(record(
        "fkg_independent",
        json!({"q": 2, "beta": 0.0}),
        joint,
        product,
        (joint - product).abs() < 1e-12,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_free_energy() {
        let mut g = FkGraph::new(2, 0, 2.0, false);
        g.add_tilde_bond(0, End::Vertex(1));
        let c = free_energy_identity_check(&g, 0.2, 0.8, 1e-10).unwrap();
        // Z(θ) = q² + q·θ/(1−θ)
        let z = |t: f64| 4.0 + 2.0 * t / (1.0 - t);
        assert!((c.lhs - (z(0.8).ln() - z(0.2).ln())).abs() < 1e-14);
        assert!(c.discrepancy < 1e-8);
    }

    #[test]
    fn empty_marked_set() {
        let sys = System::build(DomainKind::FloorBox, 2, 1, BoundaryCondition::Floor).unwrap();
        let g = FkGraph::from_system(&sys, &ModelParams::new(2, 1.0).unwrap(), true, true);
        let c = free_energy_identity_check(&g, 0.3, 0.6, 1e-9).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
    }

    #[test]
    fn top_event_of_flat_interfaces() {
        let fl = System::build(DomainKind::FloorBox, 2, 2, BoundaryCondition::Floor).unwrap();
        let i = InterfaceSet::from_plaquettes(InterfaceLabel::Top, fl.domain().clone(), &flat_plaquettes(2)).unwrap();
        let ev = top_event(&fl, &i).unwrap();
        assert_eq!(ev.must_red.iter().filter(|&&b| b).count(), 4);
        assert!(ev.below.iter().all(|&b| !b));
        let t = theta_shift(&i, 1, fl.domain()).unwrap();
        let ev = top_event(&fl, &t).unwrap();
        assert_eq!(ev.below.iter().filter(|&&b| b).count(), 4);
        assert_eq!(ev.must_red.iter().filter(|&&b| b).count(), 4);
    }

    #[test]
    fn xi_precondition() {
        let p = ModelParams::new(2, 1.0).unwrap();
        let err = xi_ratio_check(3, 3, &p, &flat_plaquettes(3), 2, 1.0, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn xi_on_two_by_two() {
        let p = ModelParams::new(2, 1.0).unwrap();
        let x = xi_ratio_check(2, 2, &p, &flat_plaquettes(2), 1, 1.0, 1e-10).unwrap();
        assert!(x.fl >= x.dob && x.dob > 0.0);
        let gap = x.fl.ln() - x.dob.ln();
        assert!((gap - x.log_gap_below).abs() < 1e-10, "{gap} vs {}", x.log_gap_below);
        assert!((gap - x.log_gap_integral).abs() < 1e-7);
    }

    #[test]
    fn xi_matches_enumeration_on_two_by_two() {
        let p = ModelParams::new(2, 1.0).unwrap();
        let fl = System::build(DomainKind::FloorBox, 2, 1, BoundaryCondition::Floor).unwrap();
        let i = InterfaceSet::from_plaquettes(InterfaceLabel::Top, fl.domain().clone(), &flat_plaquettes(2)).unwrap();
        let t = theta_shift(&i, 1, fl.domain()).unwrap();
        let g = FkGraph::from_system(&fl, &p, false, true);
        let m = crate::oracle::exact::enumerate_fk_graph(&g, f64::NAN).unwrap();
        let eob = g.edge_of_bond.clone().unwrap();
        let prob = |iface: &InterfaceSet| {
            let ev = top_event(&fl, iface).unwrap();
            let mut uf = g.union_find();
            let mut total = 0.0;
            for s in 0..m.len() {
                let mask = m.fk_mask(s).unwrap();
                if (0..g.n_bonds()).any(|b| ev.closed[eob[b]] && mask >> b & 1 == 1) {
                    continue;
                }
                g.clusters(mask, &mut uf).unwrap();
                if (0..g.n_vertices).all(|v| !ev.must_red[v] || uf.same(v, g.n_vertices)) {
                    total += m.prob(s);
                }
            }
            total
        };
        let direct = prob(&t) / prob(&i);
        let x = xi_ratio_check(2, 1, &p, &flat_plaquettes(2), 1, 1.0, 1e-10).unwrap();
        assert!((direct / x.fl - 1.0).abs() < 1e-10, "{direct} vs {}", x.fl);
    }

    #[test]
    fn unknown_suite() {
        let err = run_suite("nope", &OracleConfig::default()).unwrap_err().to_string();
        assert!(err.contains("coupling") && err.contains("fkg"));
    }

    #[test]
    fn monotonicity_and_fkg_suites_pass() {
        for s in ["monotonicity", "fkg"] {
            let r = run_suite(s, &OracleConfig::default()).unwrap();
            assert!(r.passed(), "{}", r.to_json());
        }
    }
}
