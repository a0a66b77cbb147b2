//! Truncated multivariate Taylor jets at the origin and jet-valued forms.

mod calc;
mod form;
mod group;
mod space;

pub use calc::JetCalculus;
pub use form::JetForm;
pub use group::{JetGroupField, JetMatrix, JetReps};
pub use space::{shuffle_sign, JetSpace};
