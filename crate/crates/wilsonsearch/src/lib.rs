//! Wilson quotient search.
//!
//! For a prime `p` the Wilson quotient is `w_p = ((p-1)! + 1)/p mod p`,
//! centered into `[-p/2, p/2)`; `p` is a Wilson prime iff `w_p = 0`,
//! equivalently `(p-1)! = -1 mod p^2`. Only 5, 13 and 563 are known.
//!
//! The crate computes `(p-1)! mod p^2` for every prime in a range much
//! faster than one prime at a time:
//!
//! * [`treearith`]: product trees, remainder trees and buffered modular
//!   products, the shared big-integer backbone.
//! * [`wilson`]: the range algorithms themselves, a full tree pass
//!   ([`wilson::wilson_all`]), a bounded-space factorial
//!   ([`wilson::factorial_mod`]) and the two-stage range search
//!   ([`wilson::wilson_range`]).
//! * [`cyclotomic`] + [`identities`]: arithmetic in `Z[zeta_e]` and the
//!   reduction that recovers `(p-1)!` from the much smaller `((p-1)/e)!`
//!   when `p = 1 mod e`, cutting total work by a constant factor.
//! * [`verify`]: independent oracles (naive and sqrt-time factorials)
//!   used to cross-check every archived record.
//! * [`search`]: the orchestrator behind the `wilsonsearch` binary,
//!   per-`e` scheduling, near-miss archiving, checkpointing.
//!
//! ```
//! let recs = wilsonsearch::wilson::wilson_all(600).unwrap();
//! let wilson: Vec<u64> = recs.iter().filter(|r| r.w == 0).map(|r| r.p).collect();
//! assert_eq!(wilson, [5, 13, 563]);
//! ```
//!
//! With the default `parallel` feature the heavy loops fan out over a rayon
//! pool; without it the same code runs sequentially. Results are identical
//! either way, bit for bit.

pub mod checkpoint;
pub mod cyclotomic;
pub mod error;
pub mod identities;
pub(crate) mod par;
pub mod primes;
pub mod search;
pub mod treearith;
pub mod verify;
pub mod wilson;

pub use error::{Error, Result};
pub use primes::Interval;
pub use search::{run_search, SearchConfig, SearchOutcome};
pub use wilson::WilsonRecord;
