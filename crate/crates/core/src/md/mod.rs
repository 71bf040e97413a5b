//! Mirror descent: online, uniformly convex, averaged and offline variants, plus baseline solvers.

pub mod online;
pub mod solvers;
pub mod step;
pub mod ucvx;

pub use online::{
    averaged_output, md_step, offline_optimize, optimize_with_oracle, run_doubling_md,
    run_online_md, Comparator, FinalPoint, MdState, OfflineRun, RegretTrace, TraceMeta,
};
pub use solvers::{erm_solve, rerm_solve, sgd_counterexample, ErmResult};
pub use step::{
    lipschitz_regret_bound, smooth_regret_bound, step_size_lipschitz, step_size_smooth,
    step_size_ucvx, ucvx_regret_bound, StepPolicy, UcvxBranch,
};
pub use ucvx::{run_uniformly_convex_md, UcvxRun};
