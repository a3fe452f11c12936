//! Step-by-step record of a successive interference cancellation run.

use alloc::vec::Vec;
use core::fmt;

/// A decodable stream at the base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamId {
    /// Unsplit URLLC message of `user`.
    Urllc { user: usize },
    /// Part `part` (1 or 2) of a split URLLC message.
    UrllcPart { user: usize, part: u8 },
    /// Unsplit eMBB message.
    Embb,
    /// Part `part` (1 or 2) of the split eMBB message.
    EmbbPart { part: u8 },
    /// mMTC device with the `rank`-th largest gain (0-based).
    Mmtc { rank: usize },
}

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamId::Urllc { user } => write!(f, "U{}", user + 1),
            StreamId::UrllcPart { user, part } => write!(f, "U{}.{}", user + 1, part),
            StreamId::Embb => f.write_str("B"),
            StreamId::EmbbPart { part } => write!(f, "B{part}"),
            StreamId::Mmtc { rank } => write!(f, "M{}", rank + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeStep {
    pub stream: StreamId,
    pub frequency: Option<usize>,
    pub sinr: f64,
    pub rate: f64,
    /// Rate the stream was transmitted at, when the step is a pass/fail test.
    pub target: Option<f64>,
    pub success: bool,
    /// Streams already cancelled when this step ran.
    pub cancelled: Vec<StreamId>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecodeTrace {
    pub steps: Vec<DecodeStep>,
    cancelled: Vec<StreamId>,
}

impl DecodeTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rates_of(&self, stream: StreamId) -> impl Iterator<Item = f64> + '_ {
        self.steps
            .iter()
            .filter(move |s| s.stream == stream)
            .map(|s| s.rate)
    }
}

impl fmt::Display for DecodeTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            write!(f, "step={i} stream={}", s.stream)?;
            match s.frequency {
                Some(freq) => write!(f, " freq={freq}")?,
                None => f.write_str(" freq=-")?,
            }
            write!(f, " sinr={:.17e} rate={:.17}", s.sinr, s.rate)?;
            if let Some(t) = s.target {
                write!(f, " target={t}")?;
            }
            write!(f, " ok={} cancelled={{", s.success)?;
            for (j, c) in s.cancelled.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str("}\n")?;
        }
        Ok(())
    }
}

/// Sink for decode steps; `()` discards everything so the Monte Carlo hot
/// path pays nothing for tracing.
pub(crate) trait Tracer {
    fn enabled(&self) -> bool;
    fn step(
        &mut self,
        stream: StreamId,
        frequency: Option<usize>,
        sinr: f64,
        rate: f64,
        target: Option<f64>,
        success: bool,
    );
    fn cancel(&mut self, stream: StreamId);
    fn reset_cancelled(&mut self);
}

impl Tracer for () {
    #[inline]
    fn enabled(&self) -> bool {
        false
    }
    #[inline]
    fn step(&mut self, _: StreamId, _: Option<usize>, _: f64, _: f64, _: Option<f64>, _: bool) {}
    #[inline]
    fn cancel(&mut self, _: StreamId) {}
    #[inline]
    fn reset_cancelled(&mut self) {}
}

impl Tracer for DecodeTrace {
    fn enabled(&self) -> bool {
        true
    }

    fn step(
        &mut self,
        stream: StreamId,
        frequency: Option<usize>,
        sinr: f64,
        rate: f64,
        target: Option<f64>,
        success: bool,
    ) {
        self.steps.push(DecodeStep {
            stream,
            frequency,
            sinr,
            rate,
            target,
            success,
            cancelled: self.cancelled.clone(),
        });
    }

    fn cancel(&mut self, stream: StreamId) {
        self.cancelled.push(stream);
    }

    fn reset_cancelled(&mut self) {
        self.cancelled.clear();
    }
}
