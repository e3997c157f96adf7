//! Finite combinatorics of projective Fraïssé families of σ-structures:
//! structures and their epimorphisms, spiral covers carrying group-valued
//! labellings with the quotient property, filtered Boolean powers of finite
//! algebras and the automorphisms acting on them, and finite towers
//! approximating a projective Fraïssé limit.

pub mod algebra;
pub mod autgroup;
pub mod error;
pub mod gen;
pub mod groups;
pub mod io;
pub mod maps;
pub mod spirals;
pub mod structures;
pub mod tower;

pub use error::{Error, Result};
pub use groups::{FinGroup, GroupAction, Labelling};
pub use maps::{SearchOutcome, StructMap};
pub use structures::{Family, FinStructure, Partition};
