//! Link-level simulation and power control for cell-free massive MIMO.
//!
//! The crate is organised bottom-up:
//!
//! * [`netmodel`] drops APs and UEs, computes large-scale fading and spatial
//!   correlation, and draws small-scale fading.
//! * [`training`] assigns pilots and forms MMSE channel estimates.
//! * [`dlink`] and [`ulink`] build precoders/combiners and evaluate spectral
//!   efficiency, either by Monte Carlo or in closed form.
//! * [`powerctrl`] solves max-min, sum-SE and proportional-fair power control.
//! * [`casestudies`] holds the NAFD, NOMA, PLS, EH and RIS engines.
//! * [`harness`] turns a config file into a deterministic table of results.
//!
//! [`lemmas`] contains Monte Carlo checks of the random-matrix identities the
//! rest of the crate relies on.

pub mod casestudies;
pub mod dlink;
pub mod error;
pub mod harness;
pub mod lemmas;
pub mod linalg;
pub mod netmodel;
pub mod powerctrl;
pub mod rng;
pub mod training;
pub mod ulink;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
pub use rng::Seed;
