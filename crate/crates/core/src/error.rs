use thiserror::Error;

/// Errors produced by the simulator core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} out of range: {value} not in [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },

    #[error("AID 0 is reserved and cannot be encoded")]
    ZeroAid,

    #[error("cannot assign {requested} AIDs, capacity is {capacity}")]
    CapacityExceeded { requested: usize, capacity: usize },

    #[error("group ({page}, {block}) is signaled in the DTIM but no matching TIM bitmap was supplied")]
    MissingTim { page: u8, block: u8 },

    #[error("TIM-offset signaling needs offset {needed} but the offset field holds at most {max}")]
    OffsetOverflow { needed: usize, max: usize },

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("receive power {rx_dbm:.1} dBm is below the lowest MCS threshold {min_dbm:.1} dBm (station beyond coverage)")]
    BeyondCoverage { rx_dbm: f64, min_dbm: f64 },

    #[error("schedule infeasible: {0}")]
    Infeasible(String),

    #[error("requested window [{start}, {end}) conflicts with an existing reservation")]
    Conflict { start: u64, end: u64 },

    #[error("no free interval of {needed} us exists within one DTIM cycle")]
    NoWindow { needed: u64 },

    #[error("no bits delivered; energy per bit is undefined")]
    NoTraffic,

    #[error("schedule allocates no {0} segment time")]
    ZeroCapacity(&'static str),

    #[error("no successful deliveries; delay is undefined")]
    NoDeliveries,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("unknown scenario '{0}' (expected agriculture, smart-metering, industrial, animal, or a file path)")]
    UnknownScenario(String),

    #[error("failed to parse scenario file: {0}")]
    Parse(String),

    #[error("illegal radio state transition: {state:?} on {event}")]
    IllegalTransition { state: crate::mac::power::RadioState, event: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
