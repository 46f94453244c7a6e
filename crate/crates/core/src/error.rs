use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside an operation's domain (even Jacobi modulus, square discriminant, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("moduli {first} and {second} are not coprime")]
    NonCoprimeModuli { first: u128, second: u128 },

    #[error("residue class {residue} mod {modulus} cannot contain infinitely many primes")]
    Infeasible { residue: u128, modulus: u128 },

    #[error("no admissible prime found up to the search cap {cap}")]
    SearchExhausted { cap: u64 },

    #[error("factorization budget exhausted; unfactored cofactor {cofactor}")]
    FactorBudgetExhausted { cofactor: String },

    #[error("represented-value search exhausted for form {form}")]
    RepresentationNotFound { form: String },

    /// The (t +- 1) extraction and the brute-force solver gave different answers.
    #[error("generalized Pell solvers disagree for {a}x^2 - {b}y^2 = {eps}: {detail}")]
    SolverDisagreement {
        a: String,
        b: String,
        eps: i8,
        detail: String,
    },

    /// Not exactly one ambiguous candidate represents 1 although the unit norm is +1.
    #[error("ambiguous-form exactness violated for D = {d}: {found} candidates represent 1")]
    ExactnessViolated { d: String, found: usize },

    /// Every admissible labelling of the prime factors produced primes satisfying all
    /// the symbol hypotheses, yet the predicted form was not the unique principal-genus
    /// candidate (or its Pell equation had no solution).
    #[error("predicted principal form fails for d = {d}, t = {t} under every prime ordering ({attempts} tried): {detail}")]
    ConclusionFails {
        d: u64,
        t: i8,
        attempts: usize,
        detail: String,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
