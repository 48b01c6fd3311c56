//! Numerical laboratory for the Bergman metric, the Kobayashi-Fuks metric and
//! their curvature invariants on model domains in C^n.
//!
//! The crate is organised in layers:
//!
//! * [`wjet`] - exact truncated Taylor ("Wirtinger jet") arithmetic in n
//!   holomorphic and n antiholomorphic increments. Every derivative used
//!   anywhere else is read off one of these jets.
//! * [`kernels`] - Bergman kernel providers: closed forms for the ball,
//!   polydisc and Siegel half-space, biholomorphic pushforwards, and
//!   truncated orthogonal-monomial series on complex ellipsoids.
//! * [`geometry`] - metric tensors, volume elements, the canonical invariant,
//!   holomorphic sectional curvature and Ricci curvature, all computed from a
//!   kernel provider's log-kernel jet.
//! * [`scaling`] - boundary geometry (nearest point, tangential/normal split,
//!   Levi form) and the anisotropic rescaling pipeline that blows up a
//!   strictly pseudoconvex boundary point to the Siegel half-space.
//! * [`lab`] - experiment runners and CSV reporting behind the `kfuks` CLI.

pub mod geometry;
pub mod kernels;
pub mod lab;
pub mod scaling;
pub mod tol;
pub mod wjet;

pub use num_complex::Complex64;
