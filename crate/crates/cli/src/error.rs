use gtlab::fit::FitError;
use gtlab::modal::ModalError;
use gtlab::poincare::PoincareError;
use gtlab::rates::RateError;
use gtlab::solver::SolverError;
use gtlab::telegrapher::TelegrapherError;
use gtlab::GridError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input; nothing was run.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
    /// The computation itself broke down (NaN, no roots, unusable fit).
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn invalid(field: &str, message: impl ToString) -> Self {
        CliError::Validation {
            field: field.to_string(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            SolverError::InvalidTimeStep(_) | SolverError::ShiftViolation { .. } => {
                CliError::invalid("dt", e)
            }
            SolverError::InvalidFinalTime(_) => CliError::invalid("t-final", e),
            SolverError::Grid(g) => g.into(),
            SolverError::Rate(r) => r.into(),
        }
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::invalid("n", e)
    }
}

impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        let field = match e {
            RateError::EpsilonRequired(_) | RateError::UnexpectedEpsilon(_) => "eps",
            RateError::ThetaOutOfRange(_) => "theta",
            RateError::Grid(_) => "n",
            _ => "sigma",
        };
        CliError::invalid(field, e)
    }
}

impl From<ModalError> for CliError {
    fn from(e: ModalError) -> Self {
        let field = match e {
            ModalError::EpsilonRequired(_) | ModalError::UnexpectedEpsilon(_) => "eps",
            ModalError::ZeroMode => "k-max",
            ModalError::NonPositiveSigma(_) => "sigma",
        };
        CliError::invalid(field, e)
    }
}

impl From<PoincareError> for CliError {
    fn from(e: PoincareError) -> Self {
        match e {
            PoincareError::NoRoot(_) => CliError::Numerical(e.to_string()),
            PoincareError::Inadmissible { .. } | PoincareError::NonPositiveDenominator(_) => {
                CliError::invalid("alpha", e)
            }
            _ => CliError::invalid("sigma", e),
        }
    }
}

impl From<TelegrapherError> for CliError {
    fn from(e: TelegrapherError) -> Self {
        match e {
            TelegrapherError::NoRoots { .. } | TelegrapherError::Degenerate(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::invalid("sigma", e),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        CliError::Numerical(format!("rate fit: {e}"))
    }
}
