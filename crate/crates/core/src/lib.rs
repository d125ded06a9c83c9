//! Policy-gated access decisions over a metadata-only data catalog.
//!
//! A request passes through five stages (context, user validation, data
//! classification, business purpose, compliance), then a set of hard
//! policy gates. Aggregation turns the stage verdicts into APPROVE,
//! CONDITIONAL (with controls) or DENY, and every decision carries a
//! rationale whose digest lands in the audit log.

pub mod aggregate;
pub mod audit;
pub mod catalog;
pub mod control;
pub mod controller;
pub mod gates;
pub mod label;
pub mod policy;
pub mod purpose;
pub mod rationale;
pub mod reasoner;
pub mod registry;
pub mod request;
pub mod stages;

pub use aggregate::{aggregate_and_decide, Aggregate, AggregateScore};
pub use audit::{AuditLog, AuditQuery, AuditRecord};
pub use catalog::{Catalog, Dataset, Org, SensitivityLabel, UserRecord};
pub use control::{Control, ControlKind, ControlRegistry};
pub use controller::{decide, Controller, ControllerOptions, DecisionOutcome};
pub use gates::{GateHit, GateId, GateSet};
pub use label::{DecisionLabel, Stage, StageStatus};
pub use policy::{Policy, PolicyStore};
pub use purpose::PurposeCategory;
pub use rationale::{DecisionReason, Rationale};
pub use reasoner::{ModelSettings, Reasoner, ReasonerKind};
pub use registry::Registry;
pub use request::{AccessRequest, SharingScope};
