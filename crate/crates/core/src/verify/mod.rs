//! Falsifiable numerical checks of the cone family's properties.
//!
//! Every experiment is a pure function of its configuration and seed:
//! sample `i` draws from `rng_for(seed, i)`, samples are evaluated in
//! parallel, and results are merged in sample order, so the report does not
//! depend on the number of worker threads.

mod expansion;
mod identities;
mod invariance;
mod report;
mod tangent;
mod trace;

pub use expansion::{rate_expansion, weighted_rate, RateTerms, FrameConstants};
pub use identities::{set_identity_experiment, SetIdentityConfig, SpectrumFamily};
pub use invariance::{
    invariance_experiment, persistent_violation, InvarianceConfig, StartKind,
};
pub use report::{ExperimentReport, ParamSpec, Violation};
pub use tangent::{tangent_cone_experiment, TangentConfig};
pub use trace::{trace_identity_experiment, TraceConfig};

use rayon::prelude::*;

/// Evaluates `f(0..count)` on a pool of `jobs` threads (`0` = all cores),
/// returning results in index order.
pub(crate) fn run_indexed<T, F>(count: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}
