//! Desk-scale computational toolkit for a cutoff-regularized Yang-Mills
//! system with higher-derivative regulator: exact symbolic field algebra,
//! BRST machinery, moment-based form factors, regulated propagators, and
//! graph power counting.

pub mod action;
pub mod brst;
pub mod coeff;
pub mod cutoff;
pub mod powercount;
pub mod propagators;
pub mod symfield;
