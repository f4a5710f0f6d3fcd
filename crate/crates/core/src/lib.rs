//! Internal groupoids in finite exact categories.
//!
//! The base categories are finite sets and finite abelian groups
//! ([`base`]). On top of them: internal groupoids and functors ([`gpd`]),
//! the connected-components reflection and its relatives ([`reflection`]),
//! the two factorization systems and their class predicates ([`factor`]),
//! random instance generation with brute-force oracles ([`harness`]) and a
//! line-oriented text format ([`text`]).

pub mod base;
pub mod error;
pub mod factor;
pub mod gpd;
pub mod harness;
pub mod reflection;
pub mod text;
mod unionfind;

pub use base::{Backend, Elem, Morphism, Object};
pub use error::{Error, Result};
pub use gpd::{GFunctor, Groupoid};
