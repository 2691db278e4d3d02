//! Verification experiments tying the sampler to exact and limit-shape oracles.

pub mod acceptance;
pub mod experiments;
pub mod report;
pub mod spectrum;

pub use experiments::*;
pub use report::{ExperimentReport, RawTable, Verdict};
pub use spectrum::{exact_spectrum, exact_spectrum_scaled, submultiplicativity, tmix_exact, ChainSpectrum};

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::dynamics::{cftp_sample, ChainConfig};
use crate::error::Result;
use crate::hexlattice::{make_domain, HeightField};
use crate::rng::replica_seed;

/// Thread pool for replicas, capped by `HEXMIX_THREADS` when set.
pub fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = std::env::var("HEXMIX_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
            b = b.num_threads(n.max(1));
        }
        b.build().expect("thread pool")
    })
}

/// `f(i)` for i in 0..n on the replica pool, results in index order.
pub fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    pool().install(|| (0..n).into_par_iter().map(f).collect())
}

type SampleKey = ((i64, i64, i64), u64, u64, usize);

/// Exact samples for replica seeds `replica_seed(master, i)`, i < count,
/// memoised so experiments sharing a configuration share the draws.
pub fn cftp_samples(sides: (i64, i64, i64), q: f64, master: u64, count: usize) -> Result<Arc<Vec<HeightField>>> {
    static CACHE: OnceLock<Mutex<HashMap<SampleKey, Arc<Vec<HeightField>>>>> = OnceLock::new();
    let key = (sides, q.to_bits(), master, count);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let d = make_domain(sides.0, sides.1, sides.2)?;
    let base = ChainConfig::new(&d, 0).with_q(q);
    let samples: Result<Vec<_>> = par_map(count, |i| cftp_sample(&base.clone().with_seed(replica_seed(master, i as u64))))
        .into_iter()
        .collect();
    let samples = Arc::new(samples?);
    cache.lock().unwrap().insert(key, samples.clone());
    Ok(samples)
}
