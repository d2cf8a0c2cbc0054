//! Lipkin-Meshkov-Glick model over `(h, gamma)`.

pub mod exact;
pub mod thermo;
