//! Numerical library for truncated convolution operators whose kernel is an
//! angular symbol over a fractional power of distance, together with the
//! machinery used to certify their `L^q` mapping bounds at desk scale:
//!
//! * [`kernel`] — admissible sphere symbols, the smooth radial cutoff and the
//!   near/far kernel splitting;
//! * [`field`] — grid-sampled functions, Lebesgue norms, layer-cake sums and
//!   file I/O;
//! * [`dyadic`] — dyadic cube addressing and dilation;
//! * [`operator`] — direct quadrature and FFT evaluation of the operators,
//!   plus the frequency-domain reference transform;
//! * [`spectral`] — the continuum Fourier symbol of the near kernel and its
//!   uniformity sweeps;
//! * [`maximal`] — the dyadic Hardy–Littlewood maximal operator with exact
//!   weak (1,1) constant;
//! * [`goodlambda`] — separated-support comparison, stopping cubes, good-λ
//!   inequalities and the layer-cake closing argument;
//! * [`bounds`] — closed-form constants and the top-level inequality sweeps;
//! * [`corpus`] — deterministic corpus generation;
//! * [`report`] — shared verdict tables and CSV/JSON emission.

pub mod bounds;
pub mod corpus;
pub mod dyadic;
pub mod field;
pub mod fftutil;
pub mod goodlambda;
pub mod kernel;
pub mod maximal;
pub mod operator;
pub mod quad;
pub mod report;
pub mod spectral;

pub use field::{ExponentQ, Field};
pub use kernel::{CutoffProfile, KernelSpec, SphereSymbol};
