//! Choi operators, superoperators, Kraus decompositions, dual sets and
//! instruments.

mod choi;
mod dual;
mod instrument;

pub use choi::{
    apply_choi, choi_from_superoperator, default_wires, kraus_from_choi, superoperator_from_choi, validate_channel,
    ChannelReport, ChoiOperator, KrausSet, Superoperator,
};
pub use dual::{build_dual_set, hermitian_frame, DualSet};
pub use instrument::{
    bell_operators, causal_break_instrument, computational_povm_on, ic_preparations, tetrahedral_duals,
    tetrahedral_effects, tetrahedral_povm, tetrahedral_povm_on, validate_instrument, Instrument, InstrumentKind,
    InstrumentReport,
};
