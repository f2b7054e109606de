//! Checkpoint files and the interrupt/resume protocol for long searches.
//!
//! One file per (configuration, e) job, written atomically at stage
//! boundaries: after every stage-1 digit, after every stage-2 level in the
//! recompute zone, and once more when the leaf residues are complete. A
//! resumed run fast-forwards to the most recent boundary and must produce
//! byte-identical output to an uninterrupted run; everything not stored in
//! the file (prime sets, tree shapes, per-prime seeds) is recomputed
//! deterministically from the configuration.
//!
//! File layout, all integers little-endian:
//!
//! ```text
//! "WSCK" | version u32 | config hash [32] | e u64 | lo u64 | hi u64
//! | stage tag u8 | stage index u32
//! | count u32 | { len u32 | magnitude bytes (base 256, LE) } per integer
//! | sha256 of everything above [32]
//! ```

use crate::error::{Error, Result};
use crate::primes::Interval;
use num_bigint::BigUint;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

const MAGIC: &[u8; 4] = b"WSCK";
const VERSION: u32 = 1;

/// How far a job has progressed, as stored in its checkpoint file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Stage-1 digit `i` of the factorial recursion is folded in.
    Stage1Digit(u32),
    /// The stage-2 descent has a complete W vector at this level.
    Stage2Level(u32),
    /// All leaf residues are available; only per-prime recovery remains.
    Stage3,
}

impl Stage {
    fn tag(self) -> (u8, u32) {
        match self {
            Stage::Stage1Digit(i) => (1, i),
            Stage::Stage2Level(i) => (2, i),
            Stage::Stage3 => (3, 0),
        }
    }

    fn from_tag(tag: u8, index: u32) -> Result<Self> {
        match tag {
            1 => Ok(Stage::Stage1Digit(index)),
            2 => Ok(Stage::Stage2Level(index)),
            3 => Ok(Stage::Stage3),
            _ => Err(Error::Checkpoint(format!("unknown stage tag {tag}"))),
        }
    }
}

/// Resumable state of one (configuration, e) job.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobState {
    pub config_hash: [u8; 32],
    pub e: u64,
    pub interval: Interval,
    pub stage: Stage,
    /// Stage-dependent payload: the partial stage-1 product, a stage-2 W
    /// vector indexed by node, or the leaf residues in ascending prime
    /// order.
    pub nums: Vec<BigUint>,
}

/// Serialize `state` to `path` via a temporary file and rename, so a crash
/// mid-write never leaves a truncated checkpoint behind.
pub fn save_checkpoint(state: &JobState, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(128 + 16 * state.nums.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&state.config_hash);
    buf.extend_from_slice(&state.e.to_le_bytes());
    buf.extend_from_slice(&state.interval.lo.to_le_bytes());
    buf.extend_from_slice(&state.interval.hi.to_le_bytes());
    let (tag, index) = state.stage.tag();
    buf.push(tag);
    buf.extend_from_slice(&index.to_le_bytes());
    buf.extend_from_slice(&u32::try_from(state.nums.len()).unwrap().to_le_bytes());
    for n in &state.nums {
        let bytes = n.to_bytes_le();
        buf.extend_from_slice(&u32::try_from(bytes.len()).unwrap().to_le_bytes());
        buf.extend_from_slice(&bytes);
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);

    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &buf)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint("file truncated".into()));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Read and validate a checkpoint file. Refuses anything with a bad magic,
/// version, checksum, or (when `expect_hash` is given) a configuration hash
/// that does not match the current run.
pub fn load_checkpoint(path: &Path, expect_hash: Option<&[u8; 32]>) -> Result<JobState> {
    let buf = fs::read(path)?;
    if buf.len() < 32 {
        return Err(Error::Checkpoint("file truncated".into()));
    }
    let (body, stored) = buf.split_at(buf.len() - 32);
    let digest = Sha256::digest(body);
    if digest.as_slice() != stored {
        return Err(Error::Checkpoint("checksum mismatch".into()));
    }

    let mut r = Reader { buf: body, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "version {version} not supported (expected {VERSION})"
        )));
    }
    let mut config_hash = [0u8; 32];
    config_hash.copy_from_slice(r.take(32)?);
    if let Some(expect) = expect_hash {
        if &config_hash != expect {
            return Err(Error::Checkpoint(
                "configuration hash mismatch: this file belongs to a different \
                 search configuration; clear the checkpoint directory or rerun \
                 with the original settings"
                    .into(),
            ));
        }
    }
    let e = r.u64()?;
    let lo = r.u64()?;
    let hi = r.u64()?;
    let tag = r.take(1)?[0];
    let index = r.u32()?;
    let stage = Stage::from_tag(tag, index)?;
    let count = r.u32()? as usize;
    let mut nums = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u32()? as usize;
        nums.push(BigUint::from_bytes_le(r.take(len)?));
    }
    if r.pos != body.len() {
        return Err(Error::Checkpoint("trailing bytes after payload".into()));
    }
    Ok(JobState {
        config_hash,
        e,
        interval: Interval::new(lo, hi),
        stage,
        nums,
    })
}

/// Shared checkpoint controller for one search run. Counts stage boundaries
/// globally (across jobs) and, when a directory is configured, persists the
/// job state at each one. `stop_after` aborts the run with
/// [`Error::Interrupted`] once that many boundaries have been crossed; it
/// exists so tests can interrupt a run at an exact, reproducible point.
pub struct CkptCtl {
    dir: Option<PathBuf>,
    config_hash: [u8; 32],
    crossed: AtomicU64,
    stop_after: Option<u64>,
}

impl CkptCtl {
    pub fn new(dir: Option<PathBuf>, config_hash: [u8; 32], stop_after: Option<u64>) -> Self {
        CkptCtl {
            dir,
            config_hash,
            crossed: AtomicU64::new(0),
            stop_after,
        }
    }

    /// A controller that neither saves nor interrupts.
    pub fn disabled() -> Self {
        CkptCtl::new(None, [0; 32], None)
    }

    pub fn config_hash(&self) -> &[u8; 32] {
        &self.config_hash
    }

    fn file_for(&self, e: u64) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("job_e{e}.ck")))
    }

    /// Record a stage boundary: persist `state` if a directory is set, then
    /// interrupt if the test hook says so. The state is saved before the
    /// interrupt fires, so the aborted run is exactly resumable.
    pub fn boundary(&self, state: &JobState) -> Result<()> {
        if let Some(path) = self.file_for(state.e) {
            save_checkpoint(state, &path)?;
        }
        let n = self.crossed.fetch_add(1, Ordering::SeqCst) + 1;
        if let Some(stop) = self.stop_after {
            if n >= stop {
                return Err(Error::Interrupted);
            }
        }
        Ok(())
    }

    /// Load the saved state for job `e`, if a valid one exists. A file with
    /// a mismatched configuration hash is a hard error rather than a silent
    /// restart.
    pub fn resume_state(&self, e: u64, interval: Interval) -> Result<Option<JobState>> {
        let Some(path) = self.file_for(e) else {
            return Ok(None);
        };
        if !path.exists() {
            return Ok(None);
        }
        let state = load_checkpoint(&path, Some(&self.config_hash))?;
        if state.e != e || state.interval != interval {
            return Err(Error::Checkpoint(format!(
                "checkpoint {} covers e={} over {}, expected e={} over {}",
                path.display(),
                state.e,
                state.interval,
                e,
                interval
            )));
        }
        Ok(Some(state))
    }
}
