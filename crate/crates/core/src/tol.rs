//! Centralized numerical tolerances.
//!
//! Every threshold used by the library internals and the test suites is
//! defined here rather than inlined at the call site. All values assume
//! binary64 scalars.

/// Ring axioms (commutativity, associativity, distributivity) on random jets.
pub const JET_RING: f64 = 1e-13;

/// Functional identities on jets: exp(log a) = a, a * inv(a) = 1.
pub const JET_IDENTITY: f64 = 1e-12;

/// Hermitian coefficient symmetry of jets of real-valued functions,
/// coeff(beta, alpha) = conj(coeff(alpha, beta)).
pub const JET_HERMITIAN: f64 = 1e-12;

/// Kernel Hermitian symmetry K(z,w) = conj(K(w,z)) and consistency of the
/// log-jet constant term with the pointwise kernel value.
pub const KERNEL_SYMMETRY: f64 = 1e-12;

/// Agreement between a pushed-forward kernel and a closed form, and
/// functoriality of kernel pushforwards.
pub const PUSHFORWARD: f64 = 1e-10;

/// Beta-form moments against the quadrature oracle, |alpha| <= 6.
pub const MOMENT_QUADRATURE: f64 = 1e-8;

/// Closed-form checks of metric quantities (ball and polydisc oracles).
pub const CLOSED_FORM: f64 = 1e-8;

/// Polydisc Kobayashi-Fuks diagonal entries against the product closed form.
pub const POLYDISC_DIAGONAL: f64 = 1e-9;

/// Agreement of the two routes to the Kobayashi-Fuks metric:
/// (n+1) g_b - Ric_b versus the Hessian of the potential log(K^{n+1} g_b).
pub const KF_TWO_ROUTE: f64 = 1e-9;

/// Hermitian-ness of computed metric tensors, G = G^*.
pub const METRIC_HERMITIAN: f64 = 1e-11;

/// G * G^{-1} = Id after Cholesky inversion.
pub const METRIC_INVERSE: f64 = 1e-11;

/// Kahler symmetry of the curvature table, R_{albega del} = conj(R_{begal ga}).
pub const CURVATURE_SYMMETRY: f64 = 1e-9;

/// Biholomorphic equivariance of the Kobayashi-Fuks tensor under ball
/// automorphisms, and invariance of the derived scalars.
pub const EQUIVARIANCE: f64 = 1e-9;

/// Derivative extraction against central finite differences, orders <= 3.
pub const FD_MATCH: f64 = 1e-6;

/// Map inverses: inverse(forward(z)) = z on test points.
pub const MAP_INVERSE: f64 = 1e-10;

/// Jacobian determinant constant term against finite differences.
pub const JACOBIAN_FD: f64 = 1e-8;

/// Scaling-step invariants: S_j(zeta) = b*, eta/delta = |grad r|, normal-line
/// preservation.
pub const SCALING_STEP: f64 = 1e-10;

/// Normal-line preservation residual for sampled parameters.
pub const NORMAL_LINE: f64 = 1e-9;

/// Stationarity residual of the nearest boundary point: z - p parallel to
/// the gradient at p.
pub const NEAREST_POINT: f64 = 1e-10;

/// Orthogonality residuals of the tangential/normal split.
pub const TANGENT_SPLIT: f64 = 1e-12;

/// Slack factor for "monotone error decay" assertions in convergence sweeps.
pub const MONOTONE_SLACK: f64 = 0.05;

/// Error floor below which monotone-decay assertions treat a sequence as
/// converged (avoids flagging rounding noise on exactly-constant quantities).
pub const MONOTONE_FLOOR: f64 = 1e-12;

/// Default threshold for the series truncation-tail flag of Reinhardt
/// kernels (relative, coefficient-wise on the log-kernel jet input).
pub const TAIL_FLAG: f64 = 1e-4;
