//! The blue/fuzzy projection and a registry of blue-increasing events,
//! certified by exhaustion on small boxes.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interfaces::{augment, extract_potts_interface, potts_region};
use crate::lattice::{SiteCoord, System, BLUE, RED};
use crate::potts_sampler::SpinConfig;

/// Per-site blue indicator of a colouring; the boundary keeps blue as blue
/// and maps every other colour to fuzzy.
#[derive(Clone, Debug)]
pub struct FuzzyConfig {
    system: Arc<System>,
    blue: Vec<bool>,
}

impl PartialEq for FuzzyConfig {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.system, &other.system) && self.blue == other.blue
    }
}

impl FuzzyConfig {
    pub fn system(&self) -> &Arc<System> {
        &self.system
    }

    pub fn is_blue(&self, v: usize) -> bool {
        self.blue[v]
    }

    /// Blue indicator for an extended index.
    pub fn ext_is_blue(&self, ext: usize) -> bool {
        let n = self.blue.len();
        if ext < n {
            self.blue[ext]
        } else {
            self.system.boundary_color_at(ext - n) == BLUE
        }
    }

    pub fn blue_set(&self) -> Vec<usize> {
        (0..self.blue.len()).filter(|&v| self.blue[v]).collect()
    }

    /// Blue sites as a bit mask (interior sites only, at most 64).
    pub fn blue_mask(&self) -> Option<u64> {
        (self.blue.len() <= 64).then(|| {
            self.blue
                .iter()
                .enumerate()
                .fold(0u64, |m, (v, &b)| if b { m | (1 << v) } else { m })
        })
    }

    /// A colouring with this projection: blue stays blue, fuzzy becomes red.
    pub fn representative(&self) -> SpinConfig {
        let colors = self.blue.iter().map(|&b| if b { BLUE } else { RED }).collect();
        SpinConfig::from_colors(self.system.clone(), colors).expect("valid colours")
    }
}

pub fn project_bf(sigma: &SpinConfig) -> FuzzyConfig {
    FuzzyConfig {
        system: sigma.system().clone(),
        blue: sigma.colors().iter().map(|&c| c == BLUE).collect(),
    }
}

/// How much of the colouring an event may look at, from weakest to strongest restriction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Measurability {
    Unrestricted,
    /// Depends on the colouring only through the blue set.
    Fuzzy,
    /// Depends on the colouring only through the augmented blue region.
    VhatBlueComplement,
}

pub type Predicate = Arc<dyn Fn(&SpinConfig) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct BlueEvent {
    pub name: String,
    pub tag: Measurability,
    /// Declared increasing in the blue set.
    pub increasing: bool,
    pred: Predicate,
}

impl fmt::Debug for BlueEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlueEvent")
            .field("name", &self.name)
            .field("tag", &self.tag)
            .field("increasing", &self.increasing)
            .finish()
    }
}

impl BlueEvent {
    pub fn new(
        name: impl Into<String>,
        tag: Measurability,
        increasing: bool,
        pred: impl Fn(&SpinConfig) -> bool + Send + Sync + 'static,
    ) -> Self {
        BlueEvent {
            name: name.into(),
            tag,
            increasing,
            pred: Arc::new(pred),
        }
    }

    pub fn eval(&self, sigma: &SpinConfig) -> bool {
        (self.pred)(sigma)
    }

    pub fn site_blue(s: SiteCoord) -> Self {
        BlueEvent::new(format!("blue@{},{},{}", s.i, s.j, s.k), Measurability::Fuzzy, true, move |sigma| {
            sigma.color_at(s) == Some(BLUE)
        })
    }

    /// `max_x overline-hgt_x(I_blue) ≥ t`.
    pub fn blue_height_at_least(t: i32) -> Self {
        BlueEvent::new(format!("max_blue_height>={t}"), Measurability::VhatBlueComplement, true, move |sigma| {
            blue_heights(sigma).into_iter().flatten().max().is_some_and(|h| h >= t)
        })
    }

    /// At least `count` columns with `overline-hgt_x(I_blue) ≥ t`.
    pub fn columns_at_least(t: i32, count: usize) -> Self {
        BlueEvent::new(
            format!("columns_height>={t}_count>={count}"),
            Measurability::VhatBlueComplement,
            true,
            move |sigma| blue_heights(sigma).into_iter().flatten().filter(|&h| h >= t).count() >= count,
        )
    }

    pub fn in_vhat_blue(s: SiteCoord) -> Self {
        BlueEvent::new(
            format!("vhat_blue@{},{},{}", s.i, s.j, s.k),
            Measurability::VhatBlueComplement,
            true,
            move |sigma| in_vhat_blue(sigma, &[s]),
        )
    }

    /// Every interior site at height ½ lies in the augmented blue region.
    pub fn layer_in_vhat_blue() -> Self {
        BlueEvent::new("layer_half_in_vhat_blue", Measurability::VhatBlueComplement, true, |sigma| {
            let d = sigma.system().domain();
            let sites: Vec<SiteCoord> = d.interior_sites().iter().copied().filter(|s| s.k == 0).collect();
            in_vhat_blue(sigma, &sites)
        })
    }

    pub fn sure() -> Self {
        BlueEvent::new("sure", Measurability::VhatBlueComplement, true, |_| true)
    }

    /// Negative control: decreasing in the blue set.
    pub fn not_in_vhat_blue(s: SiteCoord) -> Self {
        BlueEvent::new(
            format!("not_vhat_blue@{},{},{}", s.i, s.j, s.k),
            Measurability::VhatBlueComplement,
            false,
            move |sigma| !in_vhat_blue(sigma, &[s]),
        )
    }

    /// Negative control: neither increasing nor fuzzy-measurable for q ≥ 3.
    pub fn site_red(s: SiteCoord) -> Self {
        BlueEvent::new(format!("red@{},{},{}", s.i, s.j, s.k), Measurability::Unrestricted, false, move |sigma| {
            sigma.color_at(s) == Some(RED)
        })
    }
}

fn blue_heights(sigma: &SpinConfig) -> Vec<Option<i32>> {
    match extract_potts_interface(sigma, BLUE) {
        Ok(i) => i.height_maps().0,
        Err(_) => Vec::new(),
    }
}

fn in_vhat_blue(sigma: &SpinConfig, sites: &[SiteCoord]) -> bool {
    let d = sigma.system().domain();
    let vhat = augment(d, &potts_region(sigma, BLUE));
    sites
        .iter()
        .all(|&s| d.site_index(s).is_some_and(|e| vhat.contains(e as usize)))
}

/// True if some single non-blue site, recoloured blue, destroys the event.
pub fn is_blue_increasing_witness(event: &BlueEvent, sigma: &SpinConfig) -> bool {
    if !event.eval(sigma) {
        return false;
    }
    let mut tau = sigma.clone();
    for v in 0..sigma.colors().len() {
        let c = sigma.color(v);
        if c == BLUE {
            continue;
        }
        tau.set_color(v, BLUE);
        let kept = event.eval(&tau);
        tau.set_color(v, c);
        if !kept {
            return true;
        }
    }
    false
}

#[derive(Default)]
pub struct EventRegistry {
    events: Vec<BlueEvent>,
}

impl EventRegistry {
    pub fn new() -> Self {
        EventRegistry::default()
    }

    pub fn register(&mut self, event: BlueEvent) -> Result<()> {
        if self.events.iter().any(|e| e.name == event.name) {
            return Err(Error::Param(format!("event `{}` is already registered", event.name)));
        }
        self.events.push(event);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&BlueEvent> {
        self.events.iter().find(|e| e.name == name).ok_or_else(|| Error::Certification {
            name: name.into(),
            reason: "not registered".into(),
        })
    }

    pub fn events(&self) -> &[BlueEvent] {
        &self.events
    }

    /// The increasing events used by the monotonicity and FKG checks.
    pub fn standard() -> Self {
        let o = SiteCoord::new(0, 0, 0);
        let mut r = EventRegistry::new();
        for e in [
            BlueEvent::blue_height_at_least(1),
            BlueEvent::in_vhat_blue(o),
            BlueEvent::layer_in_vhat_blue(),
            BlueEvent::columns_at_least(1, 2),
            BlueEvent::sure(),
        ] {
            r.register(e).expect("distinct names");
        }
        r
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub name: String,
    pub increasing: bool,
    pub fuzzy_measurable: bool,
    pub vhat_measurable: bool,
    pub states: u64,
}

impl Certificate {
    pub fn measurability(&self) -> Measurability {
        if self.vhat_measurable {
            Measurability::VhatBlueComplement
        } else if self.fuzzy_measurable {
            Measurability::Fuzzy
        } else {
            Measurability::Unrestricted
        }
    }
}

pub const CERTIFY_CAP: f64 = 2e6;

/// Checks by exhaustion over all `q^V` colourings whether the event is
/// increasing in the blue set and which measurability it has.
pub fn certify(event: &BlueEvent, system: &Arc<System>, q: u8) -> Result<Certificate> {
    let nv = system.domain().n_interior();
    let states = (q as f64).powi(nv as i32);
    if states > CERTIFY_CAP || nv > 64 {
        return Err(Error::TooLarge { states, cap: CERTIFY_CAP });
    }
    let d = system.domain();
    let mut increasing = true;
    let mut by_blue: HashMap<u64, bool> = HashMap::new();
    let mut by_vhat: HashMap<Vec<bool>, bool> = HashMap::new();
    let (mut fuzzy_ok, mut vhat_ok) = (true, true);
    let mut colors = vec![1u8; nv];
    let mut count = 0u64;
    loop {
        let sigma = SpinConfig::from_colors(system.clone(), colors.clone())?;
        let val = event.eval(&sigma);
        count += 1;
        if increasing && is_blue_increasing_witness(event, &sigma) {
            increasing = false;
        }
        let mask = project_bf(&sigma).blue_mask().expect("at most 64 sites");
        if *by_blue.entry(mask).or_insert(val) != val {
            fuzzy_ok = false;
        }
        let vhat = augment(d, &potts_region(&sigma, BLUE)).members()[..nv].to_vec();
        if *by_vhat.entry(vhat).or_insert(val) != val {
            vhat_ok = false;
        }
        if !next_coloring(&mut colors, q) {
            break;
        }
    }
    Ok(Certificate {
        name: event.name.clone(),
        increasing,
        fuzzy_measurable: fuzzy_ok,
        vhat_measurable: vhat_ok && fuzzy_ok,
        states: count,
    })
}

/// Certifies and checks that the event is increasing and at least `need`-measurable.
pub fn require_certified(event: &BlueEvent, system: &Arc<System>, q: u8, need: Measurability) -> Result<Certificate> {
    if event.tag < need {
        return Err(Error::Certification {
            name: event.name.clone(),
            reason: format!("declared {:?}, need {need:?}", event.tag),
        });
    }
    let cert = certify(event, system, q)?;
    if !cert.increasing {
        return Err(Error::Certification {
            name: event.name.clone(),
            reason: "not increasing in the blue set".into(),
        });
    }
    if cert.measurability() < need {
        return Err(Error::Certification {
            name: event.name.clone(),
            reason: format!("only {:?}-measurable, need {need:?}", cert.measurability()),
        });
    }
    Ok(cert)
}

/// Advances a base-q counter over colours `1..=q`, lowest index fastest.
pub(crate) fn next_coloring(colors: &mut [u8], q: u8) -> bool {
    for c in colors.iter_mut() {
        if *c < q {
            *c += 1;
            return true;
        }
        *c = 1;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoundaryCondition, DomainKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn floor(n: usize, m: usize) -> Arc<System> {
        System::build(DomainKind::FloorBox, n, m, BoundaryCondition::Floor).unwrap()
    }

    #[test]
    fn projection_keeps_blue_set() {
        let sys = floor(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let colors: Vec<u8> = (0..18).map(|_| rng.gen_range(1..=3)).collect();
            let s = SpinConfig::from_colors(sys.clone(), colors.clone()).unwrap();
            let f = project_bf(&s);
            let want: Vec<usize> = (0..18).filter(|&v| colors[v] == BLUE).collect();
            assert_eq!(f.blue_set(), want);
            assert_eq!(project_bf(&f.representative()), f);
        }
        let all = project_bf(&SpinConfig::uniform(sys.clone(), BLUE));
        assert_eq!(all.blue_set().len(), 18);
        let nb = sys.domain().n_interior();
        let below = sys.domain().site_index(SiteCoord::new(0, 0, -1)).unwrap() as usize;
        let side = sys.domain().site_index(SiteCoord::new(-2, 0, 0)).unwrap() as usize;
        assert!(below >= nb && all.ext_is_blue(below));
        assert!(!all.ext_is_blue(side));
    }

    #[test]
    fn certification_by_exhaustion() {
        let sys = floor(2, 1);
        let o = SiteCoord::new(0, 0, 0);
        let c = certify(&BlueEvent::in_vhat_blue(o), &sys, 2).unwrap();
        assert!(c.increasing && c.vhat_measurable);
        let c = certify(&BlueEvent::site_red(o), &sys, 3).unwrap();
        assert!(!c.increasing && !c.fuzzy_measurable);
        let sys2 = floor(2, 2);
        let c = certify(&BlueEvent::blue_height_at_least(1), &sys2, 2).unwrap();
        assert!(c.increasing && c.vhat_measurable);
        assert!(require_certified(&BlueEvent::not_in_vhat_blue(o), &sys, 2, Measurability::VhatBlueComplement).is_err());
        assert!(require_certified(&BlueEvent::site_blue(o), &sys, 3, Measurability::VhatBlueComplement).is_err());
        assert!(require_certified(&BlueEvent::site_blue(o), &sys, 3, Measurability::Fuzzy).is_ok());
    }

    #[test]
    fn registry_rejects_unknown() {
        let r = EventRegistry::standard();
        assert!(r.get("sure").is_ok());
        assert!(matches!(r.get("nope"), Err(Error::Certification { .. })));
        let mut r = r;
        assert!(r.register(BlueEvent::sure()).is_err());
    }

    #[test]
    fn counter_visits_all() {
        let mut c = vec![1u8; 3];
        let mut n = 1;
        while next_coloring(&mut c, 3) {
            n += 1;
        }
        assert_eq!(n, 27);
    }
}
