//! Non-red pillars, point-to-plane connection events, Monte Carlo estimates
//! of the rates ξ_h, ξ̃_h and α_h, the fitted slope ξ and the height scale h*.

use std::collections::VecDeque;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interfaces::{augment, extract_potts_interface, potts_region, InterfaceSet};
use crate::lattice::{BoundaryCondition, DomainKind, ModelParams, SiteCoord, System, RED};
use crate::potts_sampler::{observe_chains, ChainPlan, SpinConfig};
use crate::stats::{neg_log, ratio_estimate, weighted_least_squares, McEstimate};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pillar {
    pub sites: Vec<SiteCoord>,
    /// Highest plaquette separating the pillar from its complement; 0 when empty.
    pub height: i32,
}

impl Pillar {
    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

fn require_dobrushin(sigma: &SpinConfig) -> Result<()> {
    match sigma.system().bc() {
        BoundaryCondition::Split { .. } => Ok(()),
        bc => Err(Error::Precondition(format!("pillars need a split boundary condition, got {bc:?}"))),
    }
}

/// Interior membership in `V̂_red^c ∩ L_{≥0}`.
fn nonred_upper(sigma: &SpinConfig) -> Vec<bool> {
    let d = sigma.system().domain();
    let vhat = augment(d, &potts_region(sigma, RED));
    (0..d.n_interior())
        .map(|v| !vhat.contains(v) && d.site(v).k >= 0)
        .collect()
}

fn component(sigma: &SpinConfig, member: &[bool], start: usize, seen: &mut [bool]) -> Vec<usize> {
    let d = sigma.system().domain();
    let mut comp = vec![start];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &u in d.neighbors(v) {
            let u = u as usize;
            if u < member.len() && member[u] && !seen[u] {
                seen[u] = true;
                comp.push(u);
                queue.push_back(u);
            }
        }
    }
    comp
}

/// The non-red pillar at a site of height ½.
pub fn nonred_pillar(sigma: &SpinConfig, x: SiteCoord) -> Result<Pillar> {
    require_dobrushin(sigma)?;
    let d = sigma.system().domain();
    if x.k != 0 {
        return Err(Error::Precondition(format!("pillar base {x:?} is not at height 1/2")));
    }
    let v = d
        .interior_index(x.i, x.j, x.k)
        .ok_or_else(|| Error::Geometry(format!("{x:?} is not an interior site")))?;
    let member = nonred_upper(sigma);
    if !member[v] {
        return Ok(Pillar { sites: Vec::new(), height: 0 });
    }
    let mut seen = vec![false; member.len()];
    let comp = component(sigma, &member, v, &mut seen);
    let mut sites: Vec<SiteCoord> = comp.iter().map(|&u| d.site(u)).collect();
    sites.sort();
    let height = sites.iter().map(|s| s.k + 1).max().unwrap_or(0);
    Ok(Pillar { sites, height })
}

/// Pillar heights at every column's height-½ site, in row-major column order.
pub fn pillar_heights(sigma: &SpinConfig) -> Result<Vec<i32>> {
    require_dobrushin(sigma)?;
    let d = sigma.system().domain();
    let member = nonred_upper(sigma);
    let mut seen = vec![false; member.len()];
    let mut comp_height = vec![0i32; member.len()];
    let n = d.n();
    let mut out = vec![0; n * n];
    for (c, h) in out.iter_mut().enumerate() {
        let (i, j) = d.column_cell(c);
        let Some(v) = d.interior_index(i, j, 0) else {
            continue;
        };
        if !member[v] {
            continue;
        }
        if !seen[v] {
            let comp = component(sigma, &member, v, &mut seen);
            let top = comp.iter().map(|&u| d.site(u).k + 1).max().unwrap_or(0);
            for u in comp {
                comp_height[u] = top;
            }
        }
        *h = comp_height[v];
    }
    Ok(out)
}

/// `(max_x hgt(P_x), max(0, max_x overline-hgt_x(I_red)))`; the two agree pathwise.
pub fn pillar_identity(sigma: &SpinConfig) -> Result<(i32, i32)> {
    let pillars = pillar_heights(sigma)?.into_iter().max().unwrap_or(0);
    let red = extract_potts_interface(sigma, RED)?;
    Ok((pillars, red.max_column_height().unwrap_or(0).max(0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// Point-to-plane connection rate ξ_h.
    Xi,
    /// ξ_h with the site below the origin conditioned non-red.
    XiTilde,
    /// Pillar rate α_h.
    Alpha,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub h: u32,
    pub p_hat: McEstimate,
    pub hits: u64,
    pub usable: bool,
    /// Bias-corrected `−log p̂`.
    pub rate: f64,
    pub rate_stderr: f64,
}

impl RatePoint {
    fn new(h: u32, p_hat: McEstimate, hits: u64) -> RatePoint {
        let usable = hits > 0 && p_hat.mean > 0.0 && p_hat.stderr > 0.0;
        let (rate, rate_stderr) = if usable {
            neg_log(p_hat.mean, p_hat.stderr)
        } else {
            (f64::NAN, f64::NAN)
        };
        RatePoint {
            h,
            p_hat,
            hits,
            usable,
            rate,
            rate_stderr,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    pub kind: RateKind,
    pub q: u8,
    pub beta: f64,
    pub n: usize,
    pub points: Vec<RatePoint>,
}

#[derive(Serialize)]
struct CsvRow {
    h: u32,
    p_hat: f64,
    stderr: f64,
    n_eff: f64,
    rate_hat: f64,
    rate_stderr: f64,
}

impl RateSeries {
    pub fn point(&self, h: u32) -> Option<&RatePoint> {
        self.points.iter().find(|p| p.h == h)
    }

    pub fn rate(&self, h: u32) -> Option<(f64, f64)> {
        self.point(h).filter(|p| p.usable).map(|p| (p.rate, p.rate_stderr))
    }

    /// Errors naming the first requested `h` with no hits.
    pub fn require_usable(&self, hs: &[u32]) -> Result<()> {
        for &h in hs {
            if self.rate(h).is_none() {
                return Err(Error::Unusable(format!("{:?} at h = {h} has no hits", self.kind)));
            }
        }
        Ok(())
    }

    /// Rows `(h, p_hat, stderr, n_eff, rate_hat, rate_stderr)`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for p in &self.points {
            wr.serialize(CsvRow {
                h: p.h,
                p_hat: p.p_hat.mean,
                stderr: p.p_hat.stderr,
                n_eff: p.p_hat.n_eff(),
                rate_hat: p.rate,
                rate_stderr: p.rate_stderr,
            })?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Sampling controls shared by the rate estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateOptions {
    pub plan: ChainPlan,
    /// Sites closer than this to the box boundary are not used as origins.
    pub margin: Option<usize>,
}

/// Per-sample counts for the point-to-plane events.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PointToPlaneCounts {
    pub origins: u64,
    /// `hits[h]`: origins whose non-red component touches the plane at height
    /// `h`, i.e. reaches `k(o) + h − 1`. `hits[0]` equals `hits[1]`.
    pub hits: Vec<u64>,
    /// Origins with a non-red site directly below.
    pub cond_origins: u64,
    pub cond_hits: Vec<u64>,
}

/// Counts connection events for every bulk origin of a RedAll configuration.
pub fn point_to_plane_counts(sigma: &SpinConfig, h_max: u32, margin: usize) -> PointToPlaneCounts {
    let d = sigma.system().domain();
    let n_int = d.n_interior();
    let nonred: Vec<bool> = (0..n_int).map(|v| sigma.color(v) != RED).collect();
    let mut seen = vec![false; n_int];
    let mut reach = vec![i32::MIN; n_int];
    for v in 0..n_int {
        if nonred[v] && !seen[v] {
            let comp = component(sigma, &nonred, v, &mut seen);
            let top = comp.iter().map(|&u| d.site(u).k).max().unwrap_or(i32::MIN);
            for u in comp {
                reach[u] = top;
            }
        }
    }
    let (k_lo, k_hi) = d.k_range();
    let m = margin as i32;
    let mut c = PointToPlaneCounts {
        hits: vec![0; h_max as usize + 1],
        cond_hits: vec![0; h_max as usize + 1],
        ..Default::default()
    };
    for v in 0..n_int {
        let s = d.site(v);
        if d.lateral_distance(s.i, s.j) <= m || s.k - k_lo < m || k_hi - s.k < m + h_max.max(1) as i32 {
            continue;
        }
        c.origins += 1;
        let below = d.interior_index(s.i, s.j, s.k - 1).is_some_and(|b| nonred[b]);
        c.cond_origins += below as u64;
        if !nonred[v] {
            continue;
        }
        let up = (reach[v] - s.k + 1).min(h_max as i32);
        for h in 0..=up as usize {
            c.hits[h] += 1;
            if below {
                c.cond_hits[h] += 1;
            }
        }
    }
    c
}

/// RedAll proxy for the infinite-volume red phase: a FloorBox of side `n`
/// and height `n`.
pub fn red_window(n: usize) -> Result<Arc<System>> {
    System::build(DomainKind::FloorBox, n, n, BoundaryCondition::RedAll)
}

pub fn default_margin(n: usize) -> usize {
    (n / 8).max(1)
}

/// Estimates ξ_h and ξ̃_h for `h ≤ h_max` from one set of chains.
pub fn estimate_point_to_plane_pair(
    params: &ModelParams,
    n: usize,
    h_max: u32,
    opts: &RateOptions,
) -> Result<(RateSeries, RateSeries)> {
    if n < 4 * h_max as usize {
        return Err(Error::Precondition(format!("n = {n} is below 4 h_max = {}", 4 * h_max)));
    }
    let sys = red_window(n)?;
    let margin = opts.margin.unwrap_or_else(|| default_margin(n));
    let init = SpinConfig::uniform(sys, RED);
    let counts: Vec<PointToPlaneCounts> = observe_chains(&init, params, &opts.plan, |ch| {
        point_to_plane_counts(&ch.config, h_max, margin)
    })
    .into_iter()
    .flatten()
    .collect();
    rate_series_from_counts(&counts, params, n, h_max)
}

/// ξ_h and ξ̃_h series from per-sample counts.
pub fn rate_series_from_counts(
    counts: &[PointToPlaneCounts],
    params: &ModelParams,
    n: usize,
    h_max: u32,
) -> Result<(RateSeries, RateSeries)> {
    if counts.first().is_none_or(|c| c.origins == 0) {
        return Err(Error::Precondition(format!("no bulk origins in a box of side {n}")));
    }
    let series = |kind: RateKind, points: Vec<RatePoint>| RateSeries {
        kind,
        q: params.q,
        beta: params.beta,
        n,
        points,
    };
    let mut xi = Vec::new();
    let mut tilde = Vec::new();
    let den: Vec<f64> = counts.iter().map(|c| c.cond_origins as f64).collect();
    for h in 0..=h_max as usize {
        let frac: Vec<f64> = counts.iter().map(|c| c.hits[h] as f64 / c.origins as f64).collect();
        let hits = counts.iter().map(|c| c.hits[h]).sum();
        xi.push(RatePoint::new(h as u32, McEstimate::from_series(&frac), hits));
        let num: Vec<f64> = counts.iter().map(|c| c.cond_hits[h] as f64).collect();
        let (r, se) = ratio_estimate(&num, &den);
        let base = McEstimate::from_series(&num);
        let est = McEstimate {
            mean: if r.is_finite() { r } else { 0.0 },
            stderr: if se.is_finite() { se } else { 0.0 },
            ..base
        };
        let hits = counts.iter().map(|c| c.cond_hits[h]).sum();
        tilde.push(RatePoint::new(h as u32, est, hits));
    }
    Ok((series(RateKind::Xi, xi), series(RateKind::XiTilde, tilde)))
}

/// ξ_h (or ξ̃_h when `conditioned`) for `h ≤ h_max`.
pub fn estimate_point_to_plane(
    params: &ModelParams,
    n: usize,
    h_max: u32,
    conditioned: bool,
    opts: &RateOptions,
) -> Result<RateSeries> {
    let (xi, tilde) = estimate_point_to_plane_pair(params, n, h_max, opts)?;
    Ok(if conditioned { tilde } else { xi })
}

/// α_h for `1 ≤ h ≤ h_max` under Split(0) on a slab, averaged over columns
/// at lateral distance at least `n/4`.
pub fn estimate_pillar_rate(params: &ModelParams, n: usize, h_max: u32, opts: &RateOptions) -> Result<RateSeries> {
    if n < 4 * h_max as usize {
        return Err(Error::Precondition(format!("n = {n} is below 4 h_max = {}", 4 * h_max)));
    }
    let sys = System::build(DomainKind::SlabBox, n, n, BoundaryCondition::dobrushin())?;
    let d = sys.domain().clone();
    let bulk: Vec<usize> = (0..n * n)
        .filter(|&c| {
            let (i, j) = d.column_cell(c);
            d.lateral_distance(i, j) >= (n / 4).max(1) as i32
        })
        .collect();
    let init = SpinConfig::flat(sys, 0);
    let heights: Vec<Vec<i32>> = observe_chains(&init, params, &opts.plan, |ch| {
        let all = pillar_heights(&ch.config).expect("split boundary condition");
        bulk.iter().map(|&c| all[c]).collect()
    })
    .into_iter()
    .flatten()
    .collect();
    let points = (1..=h_max)
        .map(|h| {
            let frac: Vec<f64> = heights
                .iter()
                .map(|hs| hs.iter().filter(|&&x| x >= h as i32).count() as f64 / hs.len() as f64)
                .collect();
            let hits = heights.iter().map(|hs| hs.iter().filter(|&&x| x >= h as i32).count() as u64).sum();
            RatePoint::new(h, McEstimate::from_series(&frac), hits)
        })
        .collect();
    Ok(RateSeries {
        kind: RateKind::Alpha,
        q: params.q,
        beta: params.beta,
        n,
        points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateDifference {
    pub h: u32,
    /// `rate(h + 1) − rate(h)`.
    pub diff: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiFit {
    pub slope: f64,
    pub slope_stderr: f64,
    /// 95% normal interval for the slope.
    pub ci: [f64; 2],
    /// Intercept of `rate(h) ≈ intercept + slope · h`.
    pub intercept: f64,
    pub intercept_stderr: f64,
    pub differences: Vec<RateDifference>,
}

/// Weighted least-squares slope of the usable `h ≥ 1` rates against `h`.
pub fn fit_xi(series: &RateSeries) -> Result<XiFit> {
    let pts: Vec<&RatePoint> = series.points.iter().filter(|p| p.usable && p.h >= 1).collect();
    if pts.len() < 2 {
        return Err(Error::Unusable(format!(
            "{:?} fit needs 2 usable points with h ≥ 1, found {}",
            series.kind,
            pts.len()
        )));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.h as f64).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.rate).collect();
    let se: Vec<f64> = pts.iter().map(|p| p.rate_stderr).collect();
    let fit = weighted_least_squares(&x, &y, &se).ok_or_else(|| Error::Unusable("degenerate fit".into()))?;
    let differences = pts
        .windows(2)
        .filter(|w| w[1].h == w[0].h + 1)
        .map(|w| RateDifference {
            h: w[0].h,
            diff: w[1].rate - w[0].rate,
            stderr: w[0].rate_stderr.hypot(w[1].rate_stderr),
        })
        .collect();
    Ok(XiFit {
        slope: fit.slope,
        slope_stderr: fit.slope_se,
        ci: [fit.slope - 1.96 * fit.slope_se, fit.slope + 1.96 * fit.slope_se],
        intercept: fit.intercept,
        intercept_stderr: fit.intercept_se,
        differences,
    })
}

/// `⌊log n / ξ⌋`.
pub fn h_star(n: usize, xi: f64) -> Result<u32> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::Param(format!("rate ξ = {xi} must be positive")));
    }
    if n < 2 {
        return Err(Error::Param(format!("n = {n} must be at least 2")));
    }
    Ok(((n as f64).ln() / xi).floor() as u32)
}

/// `ξ̃_{h₁+h₂} − ξ̃_{h₁} − ξ̃_{h₂}` with its standard error.
pub fn additivity_defect(tilde: &RateSeries, h1: u32, h2: u32) -> Option<(f64, f64)> {
    let (a, sa) = tilde.rate(h1 + h2)?;
    let (b, sb) = tilde.rate(h1)?;
    let (c, sc) = tilde.rate(h2)?;
    let se = if h1 == h2 { (sa * sa + 4.0 * sb * sb).sqrt() } else { (sa * sa + sb * sb + sc * sc).sqrt() };
    Some((a - b - c, se))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationRow {
    pub h: u32,
    /// `α̂_h − (ξ̂_h − 2β + log(q−1))`.
    pub alpha_vs_xi: Option<f64>,
    /// `ξ̃̂_h − α̂_h`.
    pub tilde_vs_alpha: Option<f64>,
    /// `ξ̃̂_h − (ξ̂_h − 2β + log(q−1))`.
    pub tilde_vs_xi: Option<f64>,
}

/// Discrepancies between the three rate series, reported per `h`.
pub fn relation_bundle(xi: &RateSeries, tilde: &RateSeries, alpha: &RateSeries) -> Vec<RelationRow> {
    let shift = -2.0 * xi.beta + ((xi.q as f64) - 1.0).ln();
    let hs: std::collections::BTreeSet<u32> = alpha.points.iter().map(|p| p.h).collect();
    hs.into_iter()
        .map(|h| {
            let x = xi.rate(h).map(|r| r.0 + shift);
            let a = alpha.rate(h).map(|r| r.0);
            let t = tilde.rate(h).map(|r| r.0);
            RelationRow {
                h,
                alpha_vs_xi: a.zip(x).map(|(a, x)| a - x),
                tilde_vs_alpha: t.zip(a).map(|(t, a)| t - a),
                tilde_vs_xi: t.zip(x).map(|(t, x)| t - x),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub series: Vec<RateSeries>,
    pub fit: Option<XiFit>,
    pub h_star: Vec<(usize, u32)>,
}

impl RateSummary {
    pub fn new(series: Vec<RateSeries>, fit: Option<XiFit>, ns: &[usize]) -> RateSummary {
        let h_star = fit
            .as_ref()
            .map(|f| ns.iter().filter_map(|&n| h_star(n, f.slope).ok().map(|h| (n, h))).collect())
            .unwrap_or_default();
        RateSummary { series, fit, h_star }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightConcentration {
    /// Per-sample fraction of plaquettes with height outside `[(1−ε)h*, h*]`, over n².
    pub outside_fraction: McEstimate,
    /// Median of all per-column maximal heights, pooled over samples.
    pub median_column_height: f64,
    pub mean_column_height: McEstimate,
}

pub fn height_concentration_statistic(samples: &[InterfaceSet], h_star: u32, eps: f64) -> Result<HeightConcentration> {
    let first = samples.first().ok_or_else(|| Error::Param("no samples".into()))?;
    let n = first.domain().n();
    let (lo, hi) = ((1.0 - eps) * h_star as f64, h_star as f64);
    let mut fractions = Vec::with_capacity(samples.len());
    let mut means = Vec::with_capacity(samples.len());
    let mut pooled = Vec::with_capacity(samples.len() * n * n);
    for s in samples {
        let outside = s
            .plaquettes()
            .into_iter()
            .filter(|p| {
                let h = p.height();
                h < lo || h > hi
            })
            .count();
        fractions.push(outside as f64 / (n * n) as f64);
        let cols: Vec<i32> = s.height_maps().0.into_iter().map(|h| h.unwrap_or(0)).collect();
        means.push(cols.iter().sum::<i32>() as f64 / cols.len() as f64);
        pooled.extend(cols);
    }
    pooled.sort_unstable();
    let mid = pooled.len() / 2;
    let median = if pooled.len() % 2 == 1 {
        pooled[mid] as f64
    } else {
        (pooled[mid - 1] + pooled[mid]) as f64 / 2.0
    };
    Ok(HeightConcentration {
        outside_fraction: McEstimate::from_series(&fractions),
        median_column_height: median,
        mean_column_height: McEstimate::from_series(&means),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BLUE, BoundaryCondition};
    use crate::potts_sampler::{Algorithm, Schedule};

    fn dob(n: usize) -> Arc<System> {
        System::build(DomainKind::SlabBox, n, 3, BoundaryCondition::dobrushin()).unwrap()
    }

    fn synthetic(ps: &[(u32, f64)]) -> RateSeries {
        RateSeries {
            kind: RateKind::Xi,
            q: 2,
            beta: 1.0,
            n: 8,
            points: ps
                .iter()
                .map(|&(h, p)| {
                    let mut pt = RatePoint::new(h, McEstimate { mean: p, stderr: 1e-300, n_samples: 1, tau: 0.5 }, 1);
                    pt.rate = -p.ln();
                    pt.rate_stderr = 0.0;
                    pt
                })
                .collect(),
        }
    }

    #[test]
    fn flat_has_no_pillars() {
        let s = SpinConfig::flat(dob(4), 0);
        assert!(nonred_pillar(&s, SiteCoord::new(0, 0, 0)).unwrap().is_empty());
        assert_eq!(pillar_heights(&s).unwrap(), vec![0; 16]);
        assert_eq!(pillar_identity(&s).unwrap(), (0, 0));
        assert!(nonred_pillar(&s, SiteCoord::new(0, 0, 1)).is_err());
    }

    #[test]
    fn single_blue_site_pillar() {
        let sys = dob(4);
        let mut s = SpinConfig::flat(sys.clone(), 0);
        let v = sys.domain().interior_index(0, 0, 0).unwrap();
        s.set_color(v, BLUE);
        let p = nonred_pillar(&s, SiteCoord::new(0, 0, 0)).unwrap();
        assert_eq!(p.sites, vec![SiteCoord::new(0, 0, 0)]);
        assert_eq!(p.height, 1);
        assert_eq!(pillar_identity(&s).unwrap(), (1, 1));
    }

    #[test]
    fn floating_bubble_is_not_a_pillar() {
        let sys = dob(4);
        let mut s = SpinConfig::flat(sys.clone(), 0);
        let v = sys.domain().interior_index(0, 0, 1).unwrap();
        s.set_color(v, BLUE);
        assert_eq!(pillar_heights(&s).unwrap().into_iter().max(), Some(0));
        assert_eq!(pillar_identity(&s).unwrap(), (0, 0));
    }

    #[test]
    fn exact_exponential_fit() {
        let s = synthetic(&[(1, (-2.0f64).exp()), (2, (-4.0f64).exp()), (3, (-6.0f64).exp())]);
        let f = fit_xi(&s).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-9);
        let s = synthetic(&[(1, (-2.3f64).exp()), (2, (-4.3f64).exp()), (3, (-6.3f64).exp())]);
        let f = fit_xi(&s).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 0.3).abs() < 1e-12);
        assert_eq!(f.differences.len(), 2);
        assert!(fit_xi(&synthetic(&[(1, 0.1)])).is_err());
    }

    #[test]
    fn h_star_arithmetic() {
        assert_eq!(h_star(1000, 2.0).unwrap(), 3);
        assert_eq!(h_star(55, 4.0).unwrap(), 1);
        assert_eq!(h_star(10, 5.0).unwrap(), 0);
        assert!(h_star(10, 0.0).is_err());
    }

    #[test]
    fn concentration_extremes() {
        let s = SpinConfig::flat(dob(4), 0);
        let i = extract_potts_interface(&s, BLUE).unwrap();
        let c = height_concentration_statistic(std::slice::from_ref(&i), 2, 0.5).unwrap();
        assert_eq!(c.outside_fraction.mean, 1.0);
        assert_eq!(c.median_column_height, 0.0);
        let c = height_concentration_statistic(&[i], 0, 0.5).unwrap();
        assert_eq!(c.outside_fraction.mean, 0.0);
    }

    #[test]
    fn counts_on_a_column() {
        let sys = red_window(8).unwrap();
        let mut s = SpinConfig::uniform(sys.clone(), RED);
        let d = sys.domain();
        for k in 3..=5 {
            s.set_color(d.interior_index(0, 0, k).unwrap(), BLUE);
        }
        let c = point_to_plane_counts(&s, 2, 1);
        assert_eq!(c.hits, vec![3, 3, 2]);
        assert_eq!(c.cond_hits, vec![2, 2, 1]);
        assert_eq!(c.cond_origins, 2);
    }

    #[test]
    fn small_run_is_monotone() {
        let params = ModelParams::new(2, 0.8).unwrap();
        let opts = RateOptions {
            plan: ChainPlan {
                algorithm: Algorithm::HeatBath,
                schedule: Schedule { burnin: 50, interval: 1 },
                n_samples: 400,
                chains: 2,
                seed: 3,
            },
            margin: None,
        };
        let s = estimate_point_to_plane(&params, 8, 2, false, &opts).unwrap();
        let p: Vec<f64> = s.points.iter().map(|p| p.p_hat.mean).collect();
        assert!(p[0] >= p[1] && p[1] >= p[2]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("h,p_hat,stderr,n_eff,rate_hat,rate_stderr"));
    }
}
