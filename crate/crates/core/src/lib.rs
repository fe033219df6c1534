//! Numerical toolkit for entropy inequalities interpolating between the
//! exponential and Gaussian regimes.
//!
//! The library is organised around a user-supplied even convex potential
//! Φ with Φ(0) = 0 whose growth sits strictly between linear and quadratic.
//! From Φ it derives the objects needed to certify a modified logarithmic
//! Sobolev inequality for the probability measure with density e^{-Φ}/Z:
//!
//! * [`potential`] — potential families and the growth-window hypothesis
//!   check (ratio x·Φ'(x)/Φ(x) pinned inside [1+ε, 2-ε]);
//! * [`convex`] — Legendre conjugation, the mixed quadratic/conjugate cost
//!   function H, and the weight functions h, τ, τ₂, ψ, K built on top;
//! * [`measure`] — normalisation, quadrature, tails, sampling;
//! * [`functionals`] — entropy, Dirichlet forms, best-constant scans;
//! * [`criteria`] — Hardy-type and weighted-entropy criterion constants
//!   with rigorous two-sided brackets, plus curvature shortcuts;
//! * [`concentration`] — Herbst-style Laplace and deviation bounds with
//!   Monte-Carlo cross-checks;
//! * [`lemma_lab`] — grid verification of the scalar and convex-analytic
//!   inequalities the main results rest on.
//!
//! All grid scans, quadratures and samplers are deterministic: same inputs
//! and seeds produce identical output regardless of thread count.

pub mod concentration;
pub mod convex;
pub mod criteria;
pub mod error;
pub mod functionals;
pub mod lemma_lab;
pub mod measure;
pub mod numeric;
pub mod potential;

pub use concentration::{BoundRegime, DeviationBound, DeviationRow, DeviationTable, TailBound};
pub use lemma_lab::{run_battery, LemmaVerdict, ScalarVariant};
pub use convex::{HContinuity, HFunction, LegendreEngine};
pub use criteria::{CriterionReport, Side};
pub use error::{Error, Result};
pub use functionals::{
    BestConstantReport, GShape, MemberScore, TestFunction, TwoVarTestFunction,
};
pub use measure::{LogConcaveMeasure, QuadSpec};
pub use potential::{GridSpec, HypothesisReport, Potential};
