//! Exact computer algebra for Drinfeld modules of rank at most two over
//! F_q\[t\]-algebras: Ore polynomials, torsion-point motives and their Weil
//! pairing, Tate-Drinfeld cusp expansions, h-structures and autoduality, and
//! the de Rham module with its Kodaira-Spencer and pairing formulas. All
//! arithmetic is exact; series carry explicit valuations and precision.
//!
//! ```
//! use taumod::drinfeld::{h_structure_find_field, DrinfeldModule};
//! use taumod::motive::WeilContext;
//! use taumod::poly::Poly;
//! use taumod::ring::Ring;
//! use taumod::Tower;
//!
//! // A rank-2 module over F_3 with an h-structure (H^2 = -alpha_2).
//! let f3 = Tower::fq(3, 1, None)?;
//! let e = DrinfeldModule::new(
//!     f3.el_from_index(1, 1),                       // theta = 1
//!     vec![f3.one(1), f3.el_from_index(1, 2)],      // Phi_t = 1 + tau + 2 tau^2
//! )?;
//! let h = h_structure_find_field(&e)?.expect("h-structure exists");
//!
//! // The Weil pairing of the torsion basis of E[t] generates C[t].
//! let ctx = WeilContext::new(h, &Poly::t(&f3), 12)?;
//! let beta = ctx.pair_coord(&ctx.tors_e.basis[0], &ctx.tors_e.basis[1])?;
//! assert!(beta.is_unit());
//! # Ok::<(), taumod::Error>(())
//! ```

pub mod derham;
pub mod drinfeld;
pub mod error;
pub mod field;
pub mod json;
pub mod linalg;
pub mod modn;
pub mod motive;
pub mod ore;
pub mod poly;
pub mod residue;
pub mod ring;
pub mod rng;
pub mod series;
pub mod td;
pub mod verify;

pub use drinfeld::{autoduality_check, DrinfeldModule, HStructure};
pub use error::{Error, Result};
pub use field::{FieldDesc, FieldElem, Tower};
pub use modn::ModElem;
pub use ore::{additive_kernel, KernelMode, KernelResult, OrePoly};
pub use poly::Poly;
pub use ring::Ring;
pub use series::{series_root_q_minus_1, TruncSeries, Var};
