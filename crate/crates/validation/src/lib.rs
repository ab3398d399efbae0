//! Acceptance criteria for the tenet workspace, each checked against reference
//! computations that do not share code with the library.

pub mod criteria;
pub mod oracle;

pub use criteria::{all, Verdict};
