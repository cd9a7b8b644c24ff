//! Vertical drift correction for eye-tracking reading data: the trial model,
//! file formats, a reading simulator, classical correction algorithms, the
//! ordinal decoding and ensemble stages of the learned correctors, feature
//! construction and evaluation.

pub mod batch;
pub mod corn;
pub mod correctors;
pub mod evaluate;
pub mod features;
pub mod io;
pub mod normalize;
pub mod simulate;
pub mod trial;
pub mod woc;
