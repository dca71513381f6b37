//! The function field under study: exact rational arithmetic in one or two
//! variables over the closure, orders along curves, restriction to
//! parametrized lines, and the bounded test-element enumeration.

pub mod enumerate;
pub mod parse;
pub mod poly;
pub mod rat;

pub use enumerate::{ElementStream, SearchBudget};
pub use parse::{parse_gf, parse_poly, parse_rat};
pub use poly::{verify_irreducible_deg2, BivPoly};
pub use rat::{curve_order, ord_at_point, restrict_to_line, BivRat, LineParam};

/// Whether the field is F_p-bar(t) or F_p-bar(t, u).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Univariate,
    Bivariate,
}

impl FieldKind {
    /// Transcendence degree over the constants.
    pub fn trdeg(&self) -> u32 {
        match self {
            FieldKind::Univariate => 1,
            FieldKind::Bivariate => 2,
        }
    }
}
