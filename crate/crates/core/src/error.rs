use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rank mismatch: {0}")]
    RankMismatch(String),
    #[error("profile-range: interval ({lo}, {hi}] not covered by s-grid [{first}, {last}]")]
    ProfileRange {
        lo: f64,
        hi: f64,
        first: f64,
        last: f64,
    },
    #[error("flow-diverged at s = {s}: sup norm {sup:e}")]
    FlowDiverged { s: f64, sup: f64 },
    #[error("cfl-violation: dt_ratio {0} exceeds 1/2")]
    CflViolation(f64),
    #[error("blow-up at t = {t}: sup norm {sup:e}")]
    BlowUp { t: f64, sup: f64 },
    #[error("support-overflow: scaled support radius {radius} exceeds {limit}")]
    SupportOverflow { radius: f64, limit: f64 },
    #[error("gauge-ode-drift: | |V| - 1 | = {0:e} before renormalization")]
    GaugeOdeDrift(f64),
    #[error("constraint-violated: relative Gauss residual {0:e}")]
    ConstraintViolated(f64),
    #[error("unsupported-order: derivative order {0} > 3")]
    UnsupportedOrder(usize),
    #[error("snapshot format: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
