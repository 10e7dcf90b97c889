//! Discrete-event simulation of manual picker-to-parts pallet warehouses.
//!
//! The crate builds competing layout geometries (conventional grid, Flying-V,
//! and a tri-zonal P/E/S design), applies per-layout storage policies, runs
//! inbound/outbound reach-truck processes against a deterministic event
//! kernel with named random streams (common random numbers across compared
//! scenarios), and reports four KPIs: order throughput time, required FTE,
//! on-time percentage, and storage area.
//!
//! Entry points:
//! - [`scenario::Scenario`] / [`scenario::parse_scenario`] — configuration.
//! - [`sim::run_replication`] — one seeded replication of one scenario.
//! - [`compare::run_compare`] — multi-scenario comparison under common
//!   random numbers, producing CSV/JSON reports.

pub mod compare;
pub mod engine;
pub mod error;
pub mod geom;
pub mod kpi;
pub mod layout;
pub mod model;
pub mod process;
pub mod rng;
pub mod routing;
pub mod scenario;
pub mod sim;
pub mod slotting;

pub use error::{ConfigError, SimError};
