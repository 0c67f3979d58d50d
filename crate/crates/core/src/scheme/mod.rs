//! The hiding protocol: parameters, encoder, complement measurement,
//! transpose-channel decoder and its overlap diagnostics.

mod decoder;
mod diagnostics;
mod hiding;
mod params;
pub(crate) mod split;
mod sweep;

pub use decoder::{
    build_normalization, build_normalization_from_xi, local_measurement, xi_vectors, Decoded, DecoderSummary,
    LocalOutcome, TransposeDecoder, XiVector, SUPPORT_REL_TOL,
};
pub use diagnostics::{all_delta_diagnostics, delta_diagnostics, DeltaDiagnostics};
pub use hiding::{unitarity_defect, HidingScheme};
pub use params::{derive_parameters, net_cardinality_bound, Feasibility, ParameterDerivation, SchemeParams};
pub use split::PartySplit;
pub use sweep::{decode_fidelity_sweep, FidelitySweep, StateRecord};
