//! Potts partition functions by a transfer matrix over horizontal layers.

use crate::error::{Error, Result};
use crate::lattice::{Color, ModelParams, System};

use super::exact::ENUMERATION_CAP;

enum Other {
    Site(usize),
    Fixed(Color),
}

/// `Z = Σ_σ exp(−β · #bichromatic edges)` with the system's boundary colours.
pub fn potts_partition_function(system: &System, params: &ModelParams) -> Result<f64> {
    let d = system.domain();
    let n_int = d.n_interior();
    let (k_lo, k_hi) = d.k_range();
    let n_layers = (k_hi - k_lo + 1) as usize;
    let layer_of = |v: usize| (d.site(v).k - k_lo) as usize;
    let mut pos = vec![0usize; n_int];
    let mut sizes = vec![0usize; n_layers];
    for v in 0..n_int {
        pos[v] = sizes[layer_of(v)];
        sizes[layer_of(v)] += 1;
    }
    let q = params.q as u64;
    let width = *sizes.iter().max().unwrap_or(&0);
    let states = (q as f64).powi(2 * width as i32);
    if states > ENUMERATION_CAP {
        return Err(Error::TooLarge { states, cap: ENUMERATION_CAP });
    }

    let mut local: Vec<Vec<(usize, Other)>> = (0..n_layers).map(|_| Vec::new()).collect();
    let mut between: Vec<Vec<(usize, usize)>> = (0..n_layers).map(|_| Vec::new()).collect();
    for e in d.edges() {
        let (a, b) = (e.lo as usize, e.hi as usize);
        let (v, w) = if a < n_int { (a, b) } else { (b, a) };
        if w >= n_int {
            local[layer_of(v)].push((pos[v], Other::Fixed(system.boundary_color_at(w - n_int))));
        } else if layer_of(v) == layer_of(w) {
            local[layer_of(v)].push((pos[v], Other::Site(pos[w])));
        } else {
            let (lo, hi) = if layer_of(v) < layer_of(w) { (v, w) } else { (w, v) };
            between[layer_of(lo)].push((pos[lo], pos[hi]));
        }
    }

    let decode = |code: u64, size: usize| -> Vec<Color> {
        let mut x = code;
        (0..size)
            .map(|_| {
                let c = (x % q) as Color + 1;
                x /= q;
                c
            })
            .collect()
    };
    let configs: Vec<Vec<Vec<Color>>> = sizes
        .iter()
        .map(|&s| (0..q.pow(s as u32)).map(|c| decode(c, s)).collect())
        .collect();
    let boltz = |count: usize| (-params.beta * count as f64).exp();
    let local_weight = |l: usize, c: &[Color]| {
        boltz(
            local[l]
                .iter()
                .filter(|(a, o)| match o {
                    Other::Site(b) => c[*a] != c[*b],
                    Other::Fixed(col) => c[*a] != *col,
                })
                .count(),
        )
    };

    let mut f: Vec<f64> = configs[0].iter().map(|c| local_weight(0, c)).collect();
    for l in 1..n_layers {
        let next: Vec<f64> = configs[l]
            .iter()
            .map(|c2| {
                let inner: f64 = configs[l - 1]
                    .iter()
                    .zip(&f)
                    .map(|(c1, w)| w * boltz(between[l - 1].iter().filter(|(a, b)| c1[*a] != c2[*b]).count()))
                    .sum();
                inner * local_weight(l, c2)
            })
            .collect();
        f = next;
    }
    Ok(f.iter().sum())
}
