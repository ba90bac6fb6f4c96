//! Potts configurations and Markov chains: heat-bath Glauber sweeps,
//! Swendsen–Wang sweeps with a frozen boundary, and sampling of the
//! soft-floor conditional measure.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interfaces::blue_above_floor;
use crate::lattice::{Color, DomainKind, ModelParams, SiteCoord, System, BLUE, CLASS_BLUE, CLASS_RED, RED};
use crate::rc_coupling::{node_of, UnionFind};

#[derive(Clone, Debug)]
pub struct SpinConfig {
    system: Arc<System>,
    colors: Vec<Color>,
}

impl PartialEq for SpinConfig {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.system, &other.system) && self.colors == other.colors
    }
}

impl SpinConfig {
    pub fn uniform(system: Arc<System>, color: Color) -> Self {
        let n = system.domain().n_interior();
        SpinConfig {
            system,
            colors: vec![color; n],
        }
    }

    /// Blue strictly below height `h`, red above.
    pub fn flat(system: Arc<System>, h: i32) -> Self {
        let colors = system
            .domain()
            .interior_sites()
            .iter()
            .map(|s| if s.k < h { BLUE } else { RED })
            .collect();
        SpinConfig { system, colors }
    }

    pub fn from_colors(system: Arc<System>, colors: Vec<Color>) -> Result<Self> {
        if colors.len() != system.domain().n_interior() {
            return Err(Error::Param(format!(
                "expected {} colours, got {}",
                system.domain().n_interior(),
                colors.len()
            )));
        }
        if colors.contains(&0) {
            return Err(Error::Param("colours are numbered from 1".into()));
        }
        Ok(SpinConfig { system, colors })
    }

    pub fn system(&self) -> &Arc<System> {
        &self.system
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn color(&self, v: usize) -> Color {
        self.colors[v]
    }

    pub fn set_color(&mut self, v: usize, c: Color) {
        self.colors[v] = c;
    }

    /// Colour of an extended index (interior or boundary).
    #[inline]
    pub fn ext_color(&self, ext: u32) -> Color {
        let n = self.colors.len();
        let e = ext as usize;
        if e < n {
            self.colors[e]
        } else {
            self.system.boundary_color_at(e - n)
        }
    }

    pub fn color_at(&self, s: SiteCoord) -> Option<Color> {
        self.system.domain().site_index(s).map(|e| self.ext_color(e))
    }

    pub fn energy(&self) -> u64 {
        energy(self)
    }
}

/// Number of bichromatic edges, boundary edges included.
pub fn energy(sigma: &SpinConfig) -> u64 {
    sigma
        .system
        .domain()
        .edges()
        .iter()
        .filter(|e| sigma.ext_color(e.lo) != sigma.ext_color(e.hi))
        .count() as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    HeatBath,
    SwendsenWang,
    /// One heat-bath sweep followed by one Swendsen–Wang sweep.
    Alternating,
}

#[derive(Clone, Debug)]
pub struct ChainState {
    pub config: SpinConfig,
    pub sweeps: u64,
    rng: ChaCha8Rng,
    energy: u64,
    uf: Option<UnionFind>,
}

impl ChainState {
    pub fn new(config: SpinConfig, seed: u64) -> Self {
        ChainState::with_stream(config, seed, 0)
    }

    /// Independent chains share a seed and differ in stream id.
    pub fn with_stream(config: SpinConfig, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let energy = config.energy();
        ChainState {
            config,
            sweeps: 0,
            rng,
            energy,
            uf: None,
        }
    }

    /// Incrementally maintained energy.
    pub fn energy(&self) -> u64 {
        self.energy
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Draws the FK edges coupled to the current colouring from this chain's stream.
    pub fn coupled_edges(&mut self, params: &ModelParams) -> crate::rc_coupling::EdgeConfig {
        crate::rc_coupling::couple_edges_from_spins(&self.config, params, &mut self.rng)
    }

    pub fn step(&mut self, algorithm: Algorithm, params: &ModelParams) {
        match algorithm {
            Algorithm::HeatBath => heat_bath_sweep(self, params),
            Algorithm::SwendsenWang => sw_sweep_frozen_boundary(self, params),
            Algorithm::Alternating => {
                heat_bath_sweep(self, params);
                sw_sweep_frozen_boundary(self, params);
                self.sweeps -= 1;
            }
        }
    }

    pub fn run(&mut self, algorithm: Algorithm, params: &ModelParams, sweeps: u64) {
        for _ in 0..sweeps {
            self.step(algorithm, params);
        }
    }
}

/// How to draw `n_samples` observations from independent chains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainPlan {
    pub algorithm: Algorithm,
    pub schedule: Schedule,
    pub n_samples: usize,
    pub chains: usize,
    pub seed: u64,
}

impl ChainPlan {
    /// Samples assigned to chain `c`.
    pub fn samples_in_chain(&self, c: usize) -> usize {
        let k = self.chains.max(1);
        self.n_samples / k + usize::from(c < self.n_samples % k)
    }
}

/// Runs `plan.chains` chains from `init` on streams `0..chains`, calling
/// `observe` every `interval` sweeps after burn-in. Observations come back
/// grouped by chain in chain order.
pub fn observe_chains<T, F>(init: &SpinConfig, params: &ModelParams, plan: &ChainPlan, observe: F) -> Vec<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChainState) -> T + Sync + Send,
{
    crate::par::map_indexed(plan.chains.max(1), |c| {
        let mut chain = ChainState::with_stream(init.clone(), plan.seed, c as u64);
        chain.run(plan.algorithm, params, plan.schedule.burnin);
        (0..plan.samples_in_chain(c))
            .map(|_| {
                chain.run(plan.algorithm, params, plan.schedule.interval.max(1));
                observe(&mut chain)
            })
            .collect()
    })
}

/// Resamples every interior site once, in index order, from its Gibbs conditional.
pub fn heat_bath_sweep(state: &mut ChainState, params: &ModelParams) {
    let q = params.q as usize;
    let boltz: [f64; 7] = std::array::from_fn(|k| (params.beta * k as f64).exp());
    let sys = state.config.system.clone();
    let d = sys.domain();
    let mut counts = vec![0u8; q + 1];
    let mut energy = state.energy as i64;
    for v in 0..d.n_interior() {
        let nb = d.neighbors(v);
        for &u in nb {
            counts[state.config.ext_color(u) as usize] += 1;
        }
        let mut total = 0.0;
        for c in 1..=q {
            total += boltz[counts[c] as usize];
        }
        let mut x = state.rng.gen::<f64>() * total;
        let mut new = q;
        for c in 1..=q {
            x -= boltz[counts[c] as usize];
            if x < 0.0 {
                new = c;
                break;
            }
        }
        let old = state.config.colors[v] as usize;
        energy += counts[old] as i64 - counts[new] as i64;
        state.config.colors[v] = new as Color;
        for &u in nb {
            counts[state.config.ext_color(u) as usize] = 0;
        }
    }
    state.energy = energy as u64;
    state.sweeps += 1;
}

/// Swendsen–Wang sweep: opens monochromatic edges with probability p,
/// keeps clusters attached to the boundary, recolours the rest uniformly.
pub fn sw_sweep_frozen_boundary(state: &mut ChainState, params: &ModelParams) {
    let sys = state.config.system.clone();
    let d = sys.domain();
    let n_int = d.n_interior();
    let total = n_int + sys.n_classes();
    let mut uf = state.uf.take().unwrap_or_else(|| UnionFind::new(total));
    uf.reset();
    let p = params.p();
    for ed in d.edges() {
        if state.config.ext_color(ed.lo) == state.config.ext_color(ed.hi) && state.rng.gen::<f64>() < p {
            uf.union(node_of(&sys, ed.lo), node_of(&sys, ed.hi));
        }
    }
    let mut root_color = vec![0 as Color; total];
    let red_root = uf.find(n_int + CLASS_RED as usize);
    root_color[red_root] = RED;
    if sys.n_classes() > 1 {
        let blue_root = uf.find(n_int + CLASS_BLUE as usize);
        root_color[blue_root] = BLUE;
    }
    for v in 0..n_int {
        let r = uf.find(v);
        if root_color[r] == 0 {
            root_color[r] = state.rng.gen_range(1..=params.q);
        }
        state.config.colors[v] = root_color[r];
    }
    state.uf = Some(uf);
    state.energy = state.config.energy();
    state.sweeps += 1;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionalMethod {
    Rejection,
    Restricted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub burnin: u64,
    pub interval: u64,
}

#[derive(Clone, Debug)]
pub struct ConditionalRun {
    pub samples: Vec<SpinConfig>,
    /// Chain states examined (rejection) or proposals made (restricted).
    pub attempts: u64,
    pub accepted: u64,
}

impl ConditionalRun {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }
}

/// Samples the Split(h) measure conditioned on the blue interface lying in
/// the upper half-space.
///
/// The restricted chain assumes its state space is connected under the
/// moves used; this is checked against rejection sampling on small boxes.
pub fn sample_conditional_soft_floor(
    system: Arc<System>,
    params: &ModelParams,
    n_samples: usize,
    seed: u64,
    method: ConditionalMethod,
    schedule: Schedule,
    budget: u64,
) -> Result<ConditionalRun> {
    let h = match system.bc() {
        crate::lattice::BoundaryCondition::Split { h } if h >= 0 => h,
        bc => return Err(Error::Precondition(format!("soft floor needs Split(h ≥ 0), got {bc:?}"))),
    };
    if system.domain().kind() != DomainKind::SlabBox {
        return Err(Error::Precondition("soft floor needs a slab domain".into()));
    }
    let start = SpinConfig::flat(system.clone(), h);
    let mut chain = ChainState::new(start, seed);
    let interval = schedule.interval.max(1);
    let mut run = ConditionalRun {
        samples: Vec::with_capacity(n_samples),
        attempts: 0,
        accepted: 0,
    };
    match method {
        ConditionalMethod::Rejection => {
            chain.run(Algorithm::Alternating, params, schedule.burnin);
            while run.samples.len() < n_samples {
                chain.run(Algorithm::Alternating, params, interval);
                run.attempts += 1;
                if blue_above_floor(&chain.config) {
                    run.accepted += 1;
                    run.samples.push(chain.config.clone());
                }
                if run.attempts >= budget && run.acceptance_rate() < 1e-6 {
                    return Err(Error::Sampling(format!(
                        "rejection acceptance rate {:.3e} below 1e-6 after {} attempts",
                        run.acceptance_rate(),
                        run.attempts
                    )));
                }
            }
        }
        ConditionalMethod::Restricted => {
            for _ in 0..schedule.burnin {
                restricted_sweep(&mut chain, params, &mut run);
            }
            while run.samples.len() < n_samples {
                for _ in 0..interval {
                    restricted_sweep(&mut chain, params, &mut run);
                }
                run.samples.push(chain.config.clone());
            }
        }
    }
    Ok(run)
}

/// Heat-bath plus Swendsen–Wang sweep where any move leaving the event is undone.
fn restricted_sweep(chain: &mut ChainState, params: &ModelParams, run: &mut ConditionalRun) {
    let q = params.q as usize;
    let boltz: [f64; 7] = std::array::from_fn(|k| (params.beta * k as f64).exp());
    let sys = chain.config.system.clone();
    let d = sys.domain();
    let mut counts = vec![0u8; q + 1];
    for v in 0..d.n_interior() {
        let nb = d.neighbors(v);
        for &u in nb {
            counts[chain.config.ext_color(u) as usize] += 1;
        }
        let total: f64 = (1..=q).map(|c| boltz[counts[c] as usize]).sum();
        let mut x = chain.rng.gen::<f64>() * total;
        let mut new = q;
        for c in 1..=q {
            x -= boltz[counts[c] as usize];
            if x < 0.0 {
                new = c;
                break;
            }
        }
        let old = chain.config.colors[v];
        chain.config.colors[v] = new as Color;
        run.attempts += 1;
        // the event is increasing in the blue set, so only blue → non-blue can break it
        if old == BLUE && new as Color != BLUE && !blue_above_floor(&chain.config) {
            chain.config.colors[v] = old;
        } else {
            run.accepted += 1;
        }
        for &u in nb {
            counts[chain.config.ext_color(u) as usize] = 0;
        }
    }
    let before = chain.config.colors.clone();
    sw_sweep_frozen_boundary(chain, params);
    run.attempts += 1;
    if blue_above_floor(&chain.config) {
        run.accepted += 1;
    } else {
        chain.config.colors = before;
    }
    chain.energy = chain.config.energy();
    chain.sweeps += 1;
}
