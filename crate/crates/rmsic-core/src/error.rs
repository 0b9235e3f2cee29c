use thiserror::Error;

/// Errors surfaced by the construction pipeline.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid discriminant: {0}")]
    InvalidDiscriminant(String),
    #[error("factoring bound exceeded: trial division up to {bound} could not finish {n}")]
    FactoringBound { n: String, bound: u64 },
    #[error("invalid quadratic form: {0}")]
    InvalidForm(String),
    #[error("matrix not in GL2(Z): determinant {0}")]
    NotUnimodular(String),
    #[error("not an admissible tuple: {0}")]
    NotAdmissible(String),
    #[error("element does not lie in the expected field/order: {0}")]
    WrongField(String),
    #[error("word decomposition requires a positive lower-left entry, got {0}")]
    WordDomain(String),
    #[error("continued fraction of an exact rational: {0}")]
    RationalInput(String),
    #[error("working precision exhausted: need about {needed} bits, have {have}")]
    PrecisionExhausted { needed: u32, have: u32 },
    #[error("quadrature did not reach the target accuracy of {target_bits} bits")]
    QuadratureDepth { target_bits: u32 },
    #[error("argument outside the admissible domain: {0}")]
    Domain(String),
    #[error("pole encountered in q-Pochhammer factor at index {0}")]
    QPochhammerPole(i64),
    #[error("matrix is not in the congruence group Gamma_r")]
    NotInGammaR,
    #[error("invalid shift {shift} for d={d}: 2*shift+d_j-1 must be coprime to d")]
    InvalidShift { shift: i64, d: u64 },
    #[error("imaginary part {0} of a provably real quantity exceeds tolerance")]
    NotReal(String),
    #[error("rank test failed: {0}")]
    RankTest(String),
    #[error("Newton iteration failed to converge: {0}")]
    NewtonDiverged(String),
    #[error("singular linear system in {0}")]
    Singular(String),
    #[error("algebraic recognition failed: {0}")]
    RecognitionFailed(String),
    #[error("Galois orbit is not free: {0}")]
    OrbitNotFree(String),
    #[error("all candidate shifts exhausted: {0}")]
    CandidatesExhausted(String),
    #[error("{0}")]
    Other(String),
}
