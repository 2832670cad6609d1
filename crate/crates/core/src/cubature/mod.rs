//! Cubature rules in several dimensions and their reduction.

mod multi_index;
mod orbit;
mod reduce;
mod rule;

pub use multi_index::{
    binomial, cumulative_bound, dim_poly, restricted_partition_count, MultiIndexSet,
};
pub use orbit::{
    collapsed_matrix_type1, collapsed_matrix_type12, orbit_partition, orbit_size, Orbit,
    OrbitPartition, SymmetryType, ORBIT_TOLERANCE,
};
pub use reduce::{
    reduce, reduce_sequence, reduce_step_general, reduce_step_negative, reduce_step_symmetric,
    symmetry_type, ReductionMode,
};
pub use rule::{
    tensor_rule, verify_degree, verify_degree_up_to, CubatureProvenance, CubatureRule, AUDIT_LIMIT,
};
