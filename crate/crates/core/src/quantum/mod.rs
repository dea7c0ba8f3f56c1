//! Weak-measurement physics: weak values, first-order probe states with and
//! without postselection, first-order decoherence, pointer shifts, and the
//! exact evolutions they approximate.

mod exact;
mod first_order;
mod setup;

pub use exact::{
    decoherence_branches, joint_generator, pointer_shift_exact, probe_state_postselected_exact,
    probe_state_standard_exact, Branch, CouplingModel, Deviation,
};
pub use first_order::{
    apply_probe_decoherence_first_order, decoherence_term, first_order_deviation, measurement_distribution,
    pointer_shift_first_order, postselected_terms, probe_state_postselected_first_order,
    probe_state_standard_first_order, probe_weak_values, standard_terms, FirstOrderModel, FirstOrderState,
    LinearProbeState, ProbeDensity, ProbeWeakValues,
};
pub use setup::{weak_value, weak_value_mixed, SystemState, WeakMeasurementSetup};
