//! A laboratory for exact-repairable MDS array codes: constructions with
//! small sub-packetization, an MSR family with diagonal-block structure,
//! compositions with outer codes, and verification of every claimed property
//! over exact finite-field arithmetic.

pub mod bounds;
pub mod compose;
pub mod field;
pub mod linalg;
pub mod outer;
pub mod report;
pub mod scheme;
pub mod smallsub;
pub mod verify;
pub mod yebarg;
