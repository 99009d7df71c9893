//! Capture data: file formats, bundled datasets, simulators.

mod builtin;
mod capture;
mod scr;
mod simulate;

pub use builtin::{builtin_hare, builtin_salamander, builtin_simulated_m0};
pub use capture::{load_capture_csv, write_capture_csv, CaptureHistory};
pub use scr::{load_scr_csv, load_traps_csv, sq_dist, Point, Region, ScrData, DEFAULT_BUFFER_M};
pub use simulate::{simulate_m0, simulate_scr, SimTruth};
