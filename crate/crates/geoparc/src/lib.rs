//! Phase diagram of the parking process on supercritical
//! Bienaymé-Galton-Watson trees with geometric offspring.
//!
//! Cars arrive on the vertices of a supercritical geometric(q) BGW tree
//! according to an i.i.d. law `mu`, drive towards the root until they find a
//! free spot, and exit at the root otherwise. Depending on `(mu, q)` the
//! number of cars visiting the root is either finite with geometric tail
//! (subcritical) or infinite whenever the tree is (supercritical). This
//! crate locates the transition and cross-checks every closed form three
//! independent ways:
//!
//! - [`law`]: arrival laws, generating functions `G`, `G'`, `G''`, samplers;
//! - [`kernel`]: the closed-form criterion — the threshold `t_c` where
//!   `(G - tG')^2 = 2 t^2 G G''`, the criterion value `t_c G(t_c)/phi(t_c)^2`
//!   compared against `q(1-q)`, critical curves `q_c(alpha)`, the fixed
//!   point of the flux equation and the distributional recursion;
//! - [`series`]: the truncated bivariate generating function of fully parked
//!   trees solved from its root decomposition;
//! - [`oracle`]: brute-force enumeration of small fully parked trees, the
//!   ground truth for the series engine;
//! - [`sim`]: Monte Carlo simulation of the parking process on sampled trees;
//! - [`acceptance`]: the end-to-end verification suite binding it all.

pub mod acceptance;
pub mod error;
pub mod kernel;
pub mod law;
pub mod oracle;
pub mod park;
pub mod scalar;
pub mod series;
pub mod sim;

pub use error::{Error, Result};
pub use law::{ArrivalLaw, Family, OffspringParam};
