//! Error type shared by every module in the crate.

use crate::spec::ValidationReport;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across parsing, solving and exporting.
///
/// The variants fall into two classes that binaries map to distinct exit
/// codes: input/constraint problems (`Schema`, `Constraint`, `Precondition`,
/// `ZeroProbability`, `UnsupportedFormat`, `CoverTooLarge`) and numeric
/// failures (`BracketNotFound`, `NonConvergence`, `NotApplicable`).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The JSON document does not have the expected structure.
    #[error("schema error: {0}")]
    Schema(String),

    /// The document parsed but violates a geometric constraint; the report
    /// lists every violation with its 1-based index path.
    #[error("constraint error: {} violation(s), first: {}", .0.violations.len(), .0.first_message())]
    Constraint(ValidationReport),

    /// An operation was called outside its domain (shape mismatch, word too
    /// short, grid point out of range, ...).
    #[error("precondition error: {0}")]
    Precondition(String),

    /// A root bracket could not be established before hitting the expansion
    /// cap; reported instead of silently clamping.
    #[error("bracket not found: {0}")]
    BracketNotFound(String),

    /// An iterative solve stopped without meeting its residual target.
    #[error("did not converge: {0}")]
    NonConvergence(String),

    /// The requested construction does not exist for this sponge (for
    /// example a one-parameter family on a spec with a degenerate root range).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A sampled or supplied word passes through a symbol of zero measure.
    #[error("zero-probability symbol {symbol} at position {position}")]
    ZeroProbability { position: usize, symbol: String },

    /// Geometry export was asked for a format it does not know.
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    /// A cover request would enumerate more boxes than the configured cap.
    #[error("cover at depth {depth} would hold {boxes} boxes, above the cap of {cap}")]
    CoverTooLarge { depth: usize, boxes: u128, cap: u128 },
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Schema(e.to_string())
    }
}
