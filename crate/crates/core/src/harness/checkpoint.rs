//! Binary checkpoints.
//!
//! Layout (little endian): the magic `COEXCKPT`, a `u32` version, the
//! config fingerprint, the replicate index, the stream position, the
//! clock, the schedule position, the absorbed flag, the trace so far and
//! finally the grid. State grids carry their per-state member lists so
//! that a resumed run draws exactly the same sites.

use std::path::Path;

use super::output::atomic_write;
use super::trace::DensityTrace;
use crate::engine::SimClock;
use crate::error::{Error, Result};
use crate::lattice::{CountGrid, RandomStream, StateGrid, TorusGeometry, TrackedGrid};

pub const MAGIC: &[u8; 8] = b"COEXCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum SavedGrid {
    Sites(TrackedGrid),
    Counts(CountGrid),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub fingerprint: u64,
    pub replicate: u64,
    pub seed: u64,
    pub stream: u64,
    pub word_pos: u128,
    pub clock: SimClock,
    /// Index of the next scheduled observation.
    pub next: u64,
    pub absorbed: bool,
    pub trace: DensityTrace,
    pub grid: SavedGrid,
}

/// FNV-1a, used to tie a checkpoint to the config that produced it.
pub fn fingerprint(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

impl Checkpoint {
    pub fn rng(&self) -> RandomStream {
        RandomStream::restore(self.seed, self.stream, self.word_pos)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Vec::new();
        w.extend_from_slice(MAGIC);
        w.extend_from_slice(&VERSION.to_le_bytes());
        for v in [self.fingerprint, self.replicate, self.seed, self.stream] {
            w.extend_from_slice(&v.to_le_bytes());
        }
        w.extend_from_slice(&self.word_pos.to_le_bytes());
        w.extend_from_slice(&self.clock.time.to_le_bytes());
        w.extend_from_slice(&self.clock.events.to_le_bytes());
        w.extend_from_slice(&self.clock.proposals.to_le_bytes());
        w.extend_from_slice(&self.next.to_le_bytes());
        w.push(self.absorbed as u8);

        let cols = self.trace.columns();
        put_len(&mut w, cols.len());
        for c in cols {
            put_len(&mut w, c.len());
            w.extend_from_slice(c.as_bytes());
        }
        put_len(&mut w, self.trace.len());
        for (t, row) in self.trace.times().iter().zip(self.trace.rows()) {
            w.extend_from_slice(&t.to_le_bytes());
            for v in row {
                w.extend_from_slice(&v.to_le_bytes());
            }
        }

        match &self.grid {
            SavedGrid::Sites(tracked) => {
                w.push(0);
                let g = tracked.grid();
                put_geometry(&mut w, g.geometry());
                put_len(&mut w, g.alphabet());
                w.extend_from_slice(g.states());
                for list in tracked.members() {
                    put_len(&mut w, list.len());
                    for s in list {
                        w.extend_from_slice(&s.to_le_bytes());
                    }
                }
            }
            SavedGrid::Counts(grid) => {
                w.push(1);
                put_geometry(&mut w, grid.geometry());
                for v in grid.hawk_counts().iter().chain(grid.dove_counts()) {
                    w.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        w
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint(
                "not a checkpoint file (bad magic)".into(),
            ));
        }
        let version = u32::from_le_bytes(r.array()?);
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version} (expected {VERSION})"
            )));
        }
        let fingerprint = r.u64()?;
        let replicate = r.u64()?;
        let seed = r.u64()?;
        let stream = r.u64()?;
        let word_pos = u128::from_le_bytes(r.array()?);
        let clock = SimClock {
            time: r.f64()?,
            events: r.u64()?,
            proposals: r.u64()?,
        };
        let next = r.u64()?;
        let absorbed = r.take(1)?[0] != 0;

        let ncols = r.len()?;
        let mut cols = Vec::with_capacity(ncols);
        for _ in 0..ncols {
            let n = r.len()?;
            let s = std::str::from_utf8(r.take(n)?)
                .map_err(|_| Error::Checkpoint("column name is not UTF-8".into()))?;
            cols.push(s.to_string());
        }
        let mut trace = DensityTrace::with_columns(cols);
        for _ in 0..r.len()? {
            let t = r.f64()?;
            let row = (0..ncols).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            trace.push(t, row);
        }

        let grid = match r.take(1)?[0] {
            0 => {
                let geometry = r.geometry()?;
                let alphabet = r.len()?;
                let states = r.take(geometry.sites())?.to_vec();
                let grid = StateGrid::from_states(geometry, alphabet, states)
                    .map_err(|e| Error::Checkpoint(e.to_string()))?;
                let mut members = Vec::with_capacity(alphabet);
                for _ in 0..alphabet {
                    let n = r.len()?;
                    members.push((0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?);
                }
                SavedGrid::Sites(
                    TrackedGrid::from_parts(grid, members)
                        .map_err(|e| Error::Checkpoint(e.to_string()))?,
                )
            }
            1 => {
                let geometry = r.geometry()?;
                let n = geometry.sites();
                let hawks = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
                let doves = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
                SavedGrid::Counts(
                    CountGrid::from_counts(geometry, hawks, doves)
                        .map_err(|e| Error::Checkpoint(e.to_string()))?,
                )
            }
            k => return Err(Error::Checkpoint(format!("unknown grid kind {k}"))),
        };
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes after checkpoint".into()));
        }
        Ok(Self {
            fingerprint,
            replicate,
            seed,
            stream,
            word_pos,
            clock,
            next,
            absorbed,
            trace,
            grid,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn put_len(w: &mut Vec<u8>, n: usize) {
    w.extend_from_slice(&(n as u64).to_le_bytes());
}

fn put_geometry(w: &mut Vec<u8>, g: &TorusGeometry) {
    put_len(w, g.width());
    put_len(w, g.height());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("truncated checkpoint".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        // Anything longer than the file cannot be genuine.
        if n > self.bytes.len() as u64 {
            return Err(Error::Checkpoint(format!("implausible length {n}")));
        }
        Ok(n as usize)
    }

    fn geometry(&mut self) -> Result<TorusGeometry> {
        let (w, h) = (self.len()?, self.len()?);
        TorusGeometry::new(w, h).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}
