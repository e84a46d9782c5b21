//! Scene memories built from spatial semantic pointers, spatial query masks
//! and a program executor for compositional scene questions.

pub mod hrr;
pub mod scene;
pub mod masks;
pub mod oracle;
pub mod stats;
pub mod program;
