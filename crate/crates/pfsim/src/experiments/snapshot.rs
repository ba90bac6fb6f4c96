//! The `PFSIM1` binary snapshot format.
//!
//! Layout, little-endian:
//! tag `PFSIM1` (6 bytes), version u16, q u8, β f64, domain kind u8
//! (0 floor box, 1 slab box), n u32, m u32, boundary variant u8 (0 floor,
//! 1 split, 2 red-all), split height i32 (0 otherwise), seed u64, sweep
//! u64, site count u32, edge count u32 (0 when absent), one colour byte per
//! interior site in index order, then the edge bits packed LSB-first.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, DomainKind, ModelParams, System};
use crate::potts_sampler::SpinConfig;
use crate::rc_coupling::EdgeConfig;

pub const TAG: &[u8; 6] = b"PFSIM1";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 6 + 2 + 1 + 8 + 1 + 4 + 4 + 1 + 4 + 8 + 8 + 4 + 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SnapshotHeader {
    pub q: u8,
    pub beta: f64,
    pub kind: DomainKind,
    pub n: u32,
    pub m: u32,
    pub bc: BoundaryCondition,
    pub seed: u64,
    pub sweep: u64,
}

impl SnapshotHeader {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.q, self.beta)
    }

    pub fn system(&self) -> Result<Arc<System>> {
        System::build(self.kind, self.n as usize, self.m as usize, self.bc)
    }

    /// Whether two snapshots come from the same model, domain and boundary condition.
    pub fn same_ensemble(&self, other: &SnapshotHeader) -> bool {
        self.q == other.q
            && self.beta.to_bits() == other.beta.to_bits()
            && self.kind == other.kind
            && (self.n, self.m) == (other.n, other.m)
            && self.bc == other.bc
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub colors: Vec<u8>,
    pub edges: Option<Vec<bool>>,
}

impl Snapshot {
    pub fn capture(sigma: &SpinConfig, omega: Option<&EdgeConfig>, params: &ModelParams, seed: u64, sweep: u64) -> Snapshot {
        let sys = sigma.system();
        let d = sys.domain();
        Snapshot {
            header: SnapshotHeader {
                q: params.q,
                beta: params.beta,
                kind: d.kind(),
                n: d.n() as u32,
                m: d.m() as u32,
                bc: sys.bc(),
                seed,
                sweep,
            },
            colors: sigma.colors().to_vec(),
            edges: omega.map(|w| w.bits().to_vec()),
        }
    }

    pub fn spin_config(&self, system: &Arc<System>) -> Result<SpinConfig> {
        let cfg = SpinConfig::from_colors(system.clone(), self.colors.clone())?;
        if self.colors.iter().any(|&c| c > self.header.q) {
            return Err(Error::Format(format!("colour above q = {}", self.header.q)));
        }
        Ok(cfg)
    }

    pub fn edge_config(&self, system: &Arc<System>) -> Result<Option<EdgeConfig>> {
        self.edges
            .as_ref()
            .map(|bits| EdgeConfig::from_bits(system.clone(), bits.clone()))
            .transpose()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let n_edges = self.edges.as_ref().map_or(0, Vec::len);
        let mut out = Vec::with_capacity(HEADER_LEN + self.colors.len() + n_edges.div_ceil(8));
        out.extend_from_slice(TAG);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(h.q);
        out.extend_from_slice(&h.beta.to_le_bytes());
        out.push(match h.kind {
            DomainKind::FloorBox => 0,
            DomainKind::SlabBox => 1,
        });
        out.extend_from_slice(&h.n.to_le_bytes());
        out.extend_from_slice(&h.m.to_le_bytes());
        let (variant, split) = match h.bc {
            BoundaryCondition::Floor => (0u8, 0i32),
            BoundaryCondition::Split { h } => (1, h),
            BoundaryCondition::RedAll => (2, 0),
        };
        out.push(variant);
        out.extend_from_slice(&split.to_le_bytes());
        out.extend_from_slice(&h.seed.to_le_bytes());
        out.extend_from_slice(&h.sweep.to_le_bytes());
        out.extend_from_slice(&(self.colors.len() as u32).to_le_bytes());
        out.extend_from_slice(&(n_edges as u32).to_le_bytes());
        out.extend_from_slice(&self.colors);
        if let Some(bits) = &self.edges {
            for chunk in bits.chunks(8) {
                out.push(chunk.iter().enumerate().fold(0u8, |b, (i, &x)| b | (u8::from(x) << i)));
            }
        }
        out
    }

    /// Parses a snapshot; rejects anything `to_bytes` would not produce.
    pub fn from_bytes(bytes: &[u8]) -> Result<Snapshot> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(6)? != TAG {
            return Err(Error::Format("missing PFSIM1 tag".into()));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let q = r.take(1)?[0];
        let beta = f64::from_le_bytes(r.array()?);
        let kind = match r.take(1)?[0] {
            0 => DomainKind::FloorBox,
            1 => DomainKind::SlabBox,
            k => return Err(Error::Format(format!("unknown domain kind {k}"))),
        };
        let n = u32::from_le_bytes(r.array()?);
        let m = u32::from_le_bytes(r.array()?);
        let variant = r.take(1)?[0];
        let split = i32::from_le_bytes(r.array()?);
        let bc = match (variant, split) {
            (0, 0) => BoundaryCondition::Floor,
            (1, h) => BoundaryCondition::Split { h },
            (2, 0) => BoundaryCondition::RedAll,
            _ => return Err(Error::Format(format!("invalid boundary field ({variant}, {split})"))),
        };
        let seed = u64::from_le_bytes(r.array()?);
        let sweep = u64::from_le_bytes(r.array()?);
        let n_sites = u32::from_le_bytes(r.array()?) as usize;
        let n_edges = u32::from_le_bytes(r.array()?) as usize;
        let colors = r.take(n_sites)?.to_vec();
        let edges = if n_edges == 0 {
            None
        } else {
            let packed = r.take(n_edges.div_ceil(8))?;
            if n_edges % 8 != 0 && packed[packed.len() - 1] >> (n_edges % 8) != 0 {
                return Err(Error::Format("nonzero padding bits".into()));
            }
            Some((0..n_edges).map(|i| packed[i / 8] >> (i % 8) & 1 == 1).collect())
        };
        if r.pos != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Snapshot {
            header: SnapshotHeader {
                q,
                beta,
                kind,
                n,
                m,
                bc,
                seed,
                sweep,
            },
            colors,
            edges,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Snapshot> {
        Snapshot::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::RED;

    #[test]
    fn round_trip_with_edges() {
        let sys = System::build(DomainKind::SlabBox, 3, 2, BoundaryCondition::Split { h: 1 }).unwrap();
        let sigma = SpinConfig::flat(sys.clone(), 0);
        let mut omega = EdgeConfig::all_closed(sys.clone());
        omega.set(3, true);
        let p = ModelParams::new(3, 1.25).unwrap();
        let s = Snapshot::capture(&sigma, Some(&omega), &p, 9, 120);
        let bytes = s.to_bytes();
        assert_eq!(&bytes[..6], b"PFSIM1");
        let back = Snapshot::from_bytes(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.spin_config(&sys).unwrap().colors(), sigma.colors());
        assert!(back.edge_config(&sys).unwrap().unwrap().is_open(3));
    }

    #[test]
    fn rejects_malformed() {
        let sys = System::build(DomainKind::FloorBox, 2, 1, BoundaryCondition::Floor).unwrap();
        let s = Snapshot::capture(&SpinConfig::uniform(sys, RED), None, &ModelParams::new(2, 1.0).unwrap(), 1, 0);
        let bytes = s.to_bytes();
        assert!(Snapshot::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Snapshot::from_bytes(&extra).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Snapshot::from_bytes(&bad).is_err());
    }
}
