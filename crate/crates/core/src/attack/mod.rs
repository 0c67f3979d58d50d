//! Sub-threshold attacks: party groupings, rank-one product measurements,
//! see-saw ascent and the restricted-versus-unrestricted security report.

mod measurement;
mod overlap_tail;
mod partition;
mod security;
mod seesaw;

pub use measurement::{
    attack_value, attack_value_factored, sample_product_measurement, sample_product_measurement_capped, AdaptiveStage,
    ProductMeasurement, DEFAULT_OUTCOME_CAP,
};
pub use overlap_tail::{check_overlap_tail, ErrorControlReport};
pub use partition::{enumerate_partitions, GroupPartition};
pub use security::{orthogonal_pair, security_report, PairReport, PartitionAttack, SecurityReport};
pub use seesaw::{seesaw_optimize, seesaw_optimize_operator, AttackResult, SeesawBudget, IMPROVEMENT_TOL};
