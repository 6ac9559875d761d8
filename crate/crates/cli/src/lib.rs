//! Experiment runner for the `toges-core` dynamics: JSON configs, batch
//! integration, per-run CSV tables, rate reports and figure output.

pub mod config;
pub mod csvio;
pub mod plot;
pub mod presets;
pub mod rates;
pub mod runner;

/// Process exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    pub const INVARIANT: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const CAPABILITY: u8 = 3;
}
