//! Experiment harness: scenario configuration, capture file I/O, sweep
//! drivers and CSV emission.

pub mod capture_io;
pub mod config;
pub mod sweep;

pub use capture_io::{load_capture, save_capture};
pub use config::ScenarioConfig;
pub use sweep::{
    calibrate_range, emit_csv, run_distance_sweep, run_offset_sweep, run_spacing_sweep,
    SweepPoint, SweepResult,
};
