//! Finite multipartite pure states: bilinear (Schmidt) analysis,
//! certification of hyperentanglement, explicit constructions, correlation
//! witnesses, degree of entanglement, and a JSON state format.

pub mod bilinear;
pub mod certify;
pub mod constructors;
pub mod degree;
pub mod error;
pub mod io;
pub mod sampling;
pub mod state;
pub mod witness;

pub use bilinear::{
    numerical_rank, reduced_density, schmidt_decompose, singular_values, unfold, DensityMatrix, RankReport,
    RankTolerance, SchmidtDecomposition, UnfoldingMatrix,
};
pub use certify::{
    cyclicity_test, dependency, dimension_gate, hyperentanglement_test, window_certificate, CertVerdict,
    CyclicityOutcome, Feasibility, FeasibilityReason, Overall, Window, WindowOutcome,
};
pub use degree::{degree_bipartite, degree_multipartite, AlsOptions, DegreeResult};
pub use constructors::corpus::{paper_state, paper_state_by_name, PaperState};
pub use constructors::method1::{method1_build, method1_windows, support_within, GeometricWeights, WeightRule};
pub use constructors::method2::{
    audit_extension, default_seed, method2_build, method2_extend, method2_windows, ExtensionParams, Method2Output,
    StageRecord,
};
pub use constructors::pairing::{pairing_eval, support_test, PairingFn};
pub use constructors::repair::{repair_bipartite, Repair};
pub use error::{Error, Result};
pub use state::{Amplitude, MultiIndex, SliceFamily, StateTensor, Subsystem};
pub use io::{load_state, load_state_file, save_state, save_state_with, LoadedState, Metadata};
pub use witness::{
    conditional_probability, correlation_witness, inverse_image_witness, marginal_probability, steering_operator,
    CorrelationQuery, LocalOperator, Projector, Witness,
};
