use alloc::string::String;
use core::fmt;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Coordinates or matrices whose shape does not match the algebra.
    DimensionMismatch { expected: usize, found: usize },
    /// A scalar parameter outside its admissible range.
    InvalidParameter(String),
    /// Structure constants violating antisymmetry, Jacobi, grading or stratification.
    InvalidAlgebra(String),
    /// First-layer data that does not extend to a Lie homomorphism.
    IllDefinedHomomorphism(String),
    /// The Jacobi constraints admit no solution for the requested brackets.
    InconsistentJacobi(String),
    /// A lattice whose estimated size exceeds the configured cap.
    BudgetExceeded { estimated: u64, cap: u64 },
    /// A horizontal segment with fewer than three nodes.
    DegenerateSegment,
    /// An operation that needs at least one point got none.
    EmptyInput,
    /// Möbius map evaluated at its pole.
    Pole,
    /// The coding alphabet ran out of letters.
    AlphabetExhausted { cube: usize, alphabet: usize },
    /// A referenced cube id does not exist in the tree.
    UnknownCube(usize),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidParameter(s) => write!(f, "invalid parameter: {s}"),
            Error::InvalidAlgebra(s) => write!(f, "invalid algebra: {s}"),
            Error::IllDefinedHomomorphism(s) => write!(f, "ill-defined homomorphism: {s}"),
            Error::InconsistentJacobi(s) => write!(f, "inconsistent Jacobi system: {s}"),
            Error::BudgetExceeded { estimated, cap } => {
                write!(f, "lattice budget exceeded: about {estimated} points, cap {cap}")
            }
            Error::DegenerateSegment => write!(f, "segment has fewer than three nodes"),
            Error::EmptyInput => write!(f, "empty input"),
            Error::Pole => write!(f, "pole: c*t + d = 0"),
            Error::AlphabetExhausted { cube, alphabet } => {
                write!(f, "alphabet of size {alphabet} exhausted at cube {cube}")
            }
            Error::UnknownCube(id) => write!(f, "unknown cube id {id}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
