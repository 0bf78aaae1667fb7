//! Exact quantized enveloping algebras of symmetrizable Kac–Moody algebras,
//! their category-O weight modules, quantum Weyl group operators with
//! pure-braid actions, and a numerical Casimir-connection monodromy engine
//! for spectral comparison against the quantum side.
//!
//! Layering, bottom up:
//!
//! * [`scalars`] — Laurent polynomials and rational functions in the balanced
//!   quantum variable `v` (`v^2 = q`), symbolic highest-weight polynomials,
//!   numeric specialization `v = exp(hbar/4)`.
//! * [`linalg`] — dense exact matrices over any coefficient ring, row
//!   reduction, kernels, Bareiss fraction-free determinants/adjugates.
//! * [`cartan`] — generalized Cartan matrices, realizations, roots, Weyl
//!   groups, reduced words, braid/pure-braid words, nested sets.
//! * [`qalgebra`] — the quantized enveloping algebra presentation: PBW-free
//!   free-word calculus modulo Serre ideals, Lusztig braid automorphisms.
//! * [`cato`] — Verma modules (numeric and symbolic), Shapovalov forms,
//!   irreducible quotients, classical limits.
//! * [`qweyl`] — quantum Weyl group operators, their squares, sign
//!   characters, and the pure-braid actions.
//! * [`casimir`] — classical finite-dimensional modules, the Casimir
//!   connection, loop geometry in the regular Cartan, adaptive parallel
//!   transport, abelian cochains, the equivariant braid action, and spectral
//!   comparison with the quantum side.

pub mod cartan;
pub mod casimir;
pub mod cato;
pub mod linalg;
pub mod qalgebra;
pub mod qweyl;
pub mod scalars;
