//! Sweeps, extremum location, and least-squares fits.

pub mod fit;
pub mod peaks;
pub mod precursor;
pub mod sweep;

pub use fit::{fit, FitModel, FitResult};
pub use peaks::{find_peaks, suppress_noise, Peak, PeakKind};
pub use sweep::{sweep, GridSpec, SweepResult};
