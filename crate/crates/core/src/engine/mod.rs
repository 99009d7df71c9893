//! Model-agnostic machinery for the staged fit.

mod chain;
mod config;
mod lookup;
mod pipeline;
mod pool;
mod stage1;
mod stage2;
mod stage3;
pub mod summary;

pub use chain::{
    chain_paths, read_chain, sha256_hex, write_chain, AcceptanceStat, Chain, ChainMeta, ChainSidecar,
};
pub use config::{default_workers, FitConfig, LookupScope, NModelKind, NModelSpec};
pub use lookup::{precompute_lookup, precompute_lookup_at, LookupTable};
pub use pipeline::{run_pprb, PprbFit, StageTimings};
pub use pool::parallel_map;
pub use stage1::{
    acceptance_by_group, run_stage1, RwBlock, Stage1Target, ADAPT_INTERVAL, TARGET_BIVARIATE,
    TARGET_SCALAR,
};
pub use stage2::{pprb_indices, run_stage2_pprb, run_stage2_scheduled, PprbSchedule, DRAW_COLUMN};
pub use stage3::run_stage3;
pub use summary::{ks_one_sample, ks_two_sample, summarize, ChainSummary, ColumnSummary, PmfEntry};
