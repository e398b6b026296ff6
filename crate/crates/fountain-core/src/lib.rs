//! Physics engine of a laser-cooled caesium fountain frequency standard.
//!
//! The crate models one fountain cycle end to end: exact angular-momentum
//! algebra for the D2 optical transitions ([`angular`]), optical pumping
//! into the clock state ([`pumping`]), ballistic flight through the
//! microwave cavity ([`ballistics`]), Ramsey interrogation of the clock
//! transition including microwave leakage ([`interrogation`]), normalized
//! fluorescence detection with its noise chain ([`detection`]), and the
//! frequency lock with its Allan-deviation stability analysis
//! ([`clockloop`]).
//!
//! All Monte Carlo sampling is counter-based: every atom, cycle, or
//! repeat derives its own RNG stream from a seed and its index, so
//! results are reproducible bit for bit regardless of batching or thread
//! count.

pub mod angular;
pub mod ballistics;
pub mod clockloop;
pub mod detection;
pub mod interrogation;
pub mod pumping;
