//! Problem generation, experiment specs, run orchestration and file formats.

mod config;
mod pgm;
mod phantom;
mod presets;
mod run;
mod trace_io;

pub use config::{
    apply_override, load_spec, parse_spec, save_spec, spec_to_string, ExperimentSpec, PhantomKind, PhantomSpec,
    PriorSpec, ProblemSpec, SolverEntry, SPEC_VERSION,
};
pub use pgm::{read_graymap, write_graymap};
pub use phantom::{blobs, checkerboard, make_phantom, smooth_random};
pub use presets::{
    benchmark_family, benchmark_with, preset, preset_spec, Benchmark, BenchmarkParams, PresetRow, PRESETS,
};
pub use run::{
    build_instance, build_prior, check_gradients, load_phantom, run_experiment, write_summary, ExperimentReport,
    GradCheck, RunStatus, SummaryRow,
};
pub use trace_io::{
    format_float, parse_trace, read_trace, save_trace, write_cont_trace, write_trace, TraceRow, TraceTable,
    TRACE_COLUMNS,
};
