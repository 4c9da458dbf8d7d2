//! Disk-backed share arrays.
//!
//! A directory holds one file per server plus `meta.json`. Each server file
//! is the row-major sequence of that server's component pairs, so its length
//! is exactly `elements * 2 * ceil(n/8)` bytes. Rows are fetched by chunk,
//! in ascending chunk order, through a small cache.

use std::collections::{HashMap, VecDeque};
use std::fs::{self, File};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Shape, ShareTensor};
use crate::error::{Error, Result};
use crate::ring::RingConfig;
use crate::sharing::{Domain, LocalPair, Server, SharedVec};

const CHUNK_BYTES: usize = 4 << 20;
const CACHE_CHUNKS: usize = 4;

/// Disk activity, kept apart from compute and network accounting.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IoStats {
    pub io_time: Duration,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub chunk_loads: u64,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    dims: Vec<usize>,
    n: u32,
    d: u32,
    chunk_rows: usize,
}

/// Rows `chunk * chunk_rows ..` of every server.
type Chunk = [LocalPair; 4];

pub struct LargeArray {
    dir: PathBuf,
    shape: Shape,
    cfg: RingConfig,
    chunk_rows: usize,
    cache: HashMap<usize, Chunk>,
    order: VecDeque<usize>,
    stats: IoStats,
}

fn server_file(dir: &Path, s: Server) -> PathBuf {
    dir.join(format!("{}.shares", s.name()))
}

impl LargeArray {
    /// Writes `t` with chunks of about 4 MiB per server file.
    pub fn create(dir: impl AsRef<Path>, t: &ShareTensor) -> Result<Self> {
        let cfg = t.domain().arith().ok_or_else(|| Error::Domain("LargeArray stores arithmetic shares".into()))?;
        let row_len: usize = t.shape().dims().iter().skip(1).product();
        let row_bytes = (row_len * 2 * cfg.element_bytes()).max(1);
        Self::create_with_chunk_rows(dir, t, (CHUNK_BYTES / row_bytes).max(1))
    }

    pub fn create_with_chunk_rows(dir: impl AsRef<Path>, t: &ShareTensor, chunk_rows: usize) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let cfg = t.domain().arith().ok_or_else(|| Error::Domain("LargeArray stores arithmetic shares".into()))?;
        if t.shape().rank() == 0 {
            return Err(Error::shape(0, "LargeArray needs at least one axis"));
        }
        if chunk_rows == 0 {
            return Err(Error::Config("chunk_rows must be positive".into()));
        }
        fs::create_dir_all(&dir)?;
        let started = Instant::now();
        let dom = Domain::Arith(cfg);
        let w = cfg.element_bytes();
        let mut written = 0u64;
        for s in Server::ALL {
            let p = t.data().part(s);
            let mut f = BufWriter::new(File::create(server_file(&dir, s))?);
            for (a, b) in p.first.iter().zip(&p.second) {
                f.write_all(&dom.encode(&[*a, *b]))?;
            }
            f.flush()?;
            written += (p.len() * 2 * w) as u64;
        }
        let meta = Meta { dims: t.shape().dims().to_vec(), n: cfg.n, d: cfg.d, chunk_rows };
        fs::write(dir.join("meta.json"), serde_json::to_vec_pretty(&meta).expect("meta serializes"))?;
        let mut la = Self::open(&dir)?;
        la.stats.bytes_written = written;
        la.stats.io_time = started.elapsed();
        Ok(la)
    }

    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let meta: Meta = serde_json::from_slice(&fs::read(dir.join("meta.json"))?)
            .map_err(|e| Error::Format(format!("meta.json: {e}")))?;
        let cfg = RingConfig::new(meta.n, meta.d)?;
        let shape = Shape::from(meta.dims);
        let expect = (shape.len() * 2 * cfg.element_bytes()) as u64;
        for s in Server::ALL {
            let len = fs::metadata(server_file(&dir, s))?.len();
            if len != expect {
                return Err(Error::Format(format!("{} holds {len} bytes, expected {expect}", s.name())));
            }
        }
        if shape.rank() == 0 || meta.chunk_rows == 0 {
            return Err(Error::Format("meta.json describes no rows".into()));
        }
        Ok(LargeArray {
            dir,
            shape,
            cfg,
            chunk_rows: meta.chunk_rows,
            cache: HashMap::new(),
            order: VecDeque::new(),
            stats: IoStats::default(),
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape.dims()[0]
    }

    pub fn row_len(&self) -> usize {
        self.shape.dims().iter().skip(1).product()
    }

    pub fn chunk_rows(&self) -> usize {
        self.chunk_rows
    }

    /// Bytes per element per server file.
    pub fn record_bytes(&self) -> usize {
        2 * self.cfg.element_bytes()
    }

    pub fn io_stats(&self) -> IoStats {
        self.stats
    }

    fn load_chunk(&mut self, c: usize) -> Result<()> {
        if self.cache.contains_key(&c) {
            return Ok(());
        }
        let started = Instant::now();
        let start_row = c * self.chunk_rows;
        let rows = self.chunk_rows.min(self.rows() - start_row);
        let count = rows * self.row_len();
        let rec = self.record_bytes();
        let dom = Domain::Arith(self.cfg);
        let mut buf = vec![0u8; count * rec];
        let chunk: Chunk = {
            let mut parts: [LocalPair; 4] = Default::default();
            for s in Server::ALL {
                let mut f = File::open(server_file(&self.dir, s))?;
                f.seek(SeekFrom::Start((start_row * self.row_len() * rec) as u64))?;
                f.read_exact(&mut buf)?;
                let flat = dom.decode(&buf, 2 * count)?;
                let (first, second) = flat.chunks_exact(2).map(|p| (p[0], p[1])).unzip();
                parts[s.index()] = LocalPair::new(first, second);
            }
            parts
        };
        self.stats.bytes_read += (4 * buf.len()) as u64;
        self.stats.chunk_loads += 1;
        self.stats.io_time += started.elapsed();
        if self.order.len() >= CACHE_CHUNKS {
            if let Some(old) = self.order.pop_front() {
                self.cache.remove(&old);
            }
        }
        self.order.push_back(c);
        self.cache.insert(c, chunk);
        Ok(())
    }

    /// Rows at `indices`, in the given order, shaped `(len, dims[1..])`.
    pub fn get_batch(&mut self, indices: &[usize]) -> Result<ShareTensor> {
        if let Some(bad) = indices.iter().find(|i| **i >= self.rows()) {
            return Err(Error::shape(0, format!("row {bad} out of range {}", self.rows())));
        }
        let row_len = self.row_len();
        let mut by_chunk: Vec<(usize, usize)> = indices.iter().enumerate().map(|(k, r)| (*r, k)).collect();
        by_chunk.sort_unstable();
        let mut slots: Vec<[(Vec<u128>, Vec<u128>); 4]> = vec![Default::default(); indices.len()];
        for (row, k) in by_chunk {
            let c = row / self.chunk_rows;
            self.load_chunk(c)?;
            let chunk = &self.cache[&c];
            let off = (row - c * self.chunk_rows) * row_len;
            for s in Server::ALL {
                let p = &chunk[s.index()];
                slots[k][s.index()] = (p.first[off..off + row_len].to_vec(), p.second[off..off + row_len].to_vec());
            }
        }
        let parts = Server::ALL.map(|s| {
            let mut pair = LocalPair::default();
            for slot in &slots {
                pair.first.extend_from_slice(&slot[s.index()].0);
                pair.second.extend_from_slice(&slot[s.index()].1);
            }
            pair
        });
        let mut dims = self.shape.dims().to_vec();
        dims[0] = indices.len();
        ShareTensor::new(dims, SharedVec::from_parts(Domain::Arith(self.cfg), parts))
    }

    /// The whole array, by a sequential scan.
    pub fn load_all(&mut self) -> Result<ShareTensor> {
        let all: Vec<usize> = (0..self.rows()).collect();
        self.get_batch(&all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Engine, EngineConfig};
    use crate::tensor::Tensor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_and_file_length() {
        let dir = tempfile::tempdir().unwrap();
        let mut e = Engine::new(EngineConfig::default().with_seed(4));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let vals: Vec<f64> = (0..60).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let t = ShareTensor::input(&mut e, 0, &Tensor::new([10, 2, 3], vals).unwrap()).unwrap();
        let mut la = LargeArray::create_with_chunk_rows(dir.path(), &t, 3).unwrap();
        let len = fs::metadata(server_file(dir.path(), Server::Sa)).unwrap().len();
        assert_eq!(len, 60 * la.record_bytes() as u64);
        assert_eq!(la.load_all().unwrap(), t);
        let b = la.get_batch(&[9, 0, 4, 4]).unwrap();
        assert_eq!(b.shape().dims(), &[4, 2, 3]);
        assert_eq!(b, t.take(&[9, 0, 4, 4], 0).unwrap());
        assert!(la.io_stats().chunk_loads >= 4);
        assert!(la.get_batch(&[10]).is_err());
        let reopened = LargeArray::open(dir.path()).unwrap();
        assert_eq!(reopened.shape(), t.shape());
    }

    #[test]
    fn rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut e = Engine::new(EngineConfig::default());
        let t = ShareTensor::input(&mut e, 0, &Tensor::new([2], vec![1.0, 2.0]).unwrap()).unwrap();
        LargeArray::create(dir.path(), &t).unwrap();
        let f = server_file(dir.path(), Server::S2);
        let bytes = fs::read(&f).unwrap();
        fs::write(&f, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(LargeArray::open(dir.path()), Err(Error::Format(_))));
    }
}
