//! The spin algebra `A(I, ε)` on its subset-indexed L² space.
//!
//! A basis vector `x_A` is stored at the bitmask of `A`, bit `p` standing for
//! the `p`-th index in the model order. Left operators (`β`) multiply on the
//! left, right operators (`α`) on the right.

mod model;
mod ops;
mod sign;
mod verify;

pub use model::{
    max_dim, LinearOp, Mode, Prim, Side, SparseVec, SpinModel, SpinVector, DEFAULT_MAX_DIM,
    VERIFY_MAX_DIM,
};
pub use ops::{Letter, LetterKind, OperatorWord};
pub use sign::{Label, SignFunction};
pub use verify::{enlargement_consistency, EnlargementReport, Family, ResidualReport, ResidualRow};
pub(crate) use verify::check_dim;
