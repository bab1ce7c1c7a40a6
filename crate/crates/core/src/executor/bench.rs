//! Early-versus-late per-step cost measurement.

use std::ops::Range;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{network_step, NetworkSpec, NetworkState};
use crate::error::{Error, Result};
use crate::streams::StreamSource;

/// Which step ranges to time. Steps are counted from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWindows {
    /// First step of the early window.
    pub early_start: u64,
    /// Steps per window. The late window is the final `window` steps.
    pub window: u64,
}

impl Default for CostWindows {
    fn default() -> Self {
        CostWindows { early_start: 1_000, window: 10_000 }
    }
}

impl CostWindows {
    /// Early and late ranges clipped to a run of `steps` steps; they never overlap.
    pub fn ranges(&self, steps: u64) -> (Range<u64>, Range<u64>) {
        let early_start = self.early_start.min(steps);
        let early = early_start..early_start.saturating_add(self.window).min(steps);
        let late_start = steps.saturating_sub(self.window).max(early.end);
        (early, late_start..steps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub steps: u64,
    pub early_window: Range<u64>,
    pub late_window: Range<u64>,
    pub early_mean_ns: Option<f64>,
    pub late_mean_ns: Option<f64>,
    /// `late_mean / early_mean`, when both windows are non-empty.
    pub ratio: Option<f64>,
    /// Engine-resident bytes at the end of the early window.
    pub memory_early: usize,
    /// Engine-resident bytes at the end of the run.
    pub memory_late: usize,
}

impl CostReport {
    pub fn memory_constant(&self) -> bool {
        self.memory_early == self.memory_late
    }
}

/// Runs `spec` for `steps` steps over `source`, timing two windows.
///
/// The source must yield at least `steps` items.
pub fn measure_constant_cost<S: StreamSource>(
    spec: &NetworkSpec,
    mut source: S,
    steps: u64,
    windows: CostWindows,
) -> Result<CostReport> {
    let (early, late) = windows.ranges(steps);
    let mut state = NetworkState::zeros(spec);
    let engine_bytes = |state: &NetworkState| spec.resident_bytes() + state.resident_bytes();
    let mut memory_early = engine_bytes(&state);
    let mut early_started = None;
    let mut late_started = None;
    let mut early_ns = None;

    for t in 0..steps {
        if t == early.start && !early.is_empty() {
            early_started = Some(Instant::now());
        }
        if t == late.start && !late.is_empty() {
            late_started = Some(Instant::now());
        }
        let x = source
            .next_input()?
            .ok_or_else(|| Error::InvalidInput(format!("source ended after {t} of {steps} steps")))?;
        state = network_step(spec, &state, &x)?.1;
        if t + 1 == early.end {
            if let Some(start) = early_started.take() {
                early_ns = Some(start.elapsed().as_nanos() as f64);
            }
            memory_early = engine_bytes(&state);
        }
    }
    let late_ns = late_started.map(|s| s.elapsed().as_nanos() as f64);

    let mean = |ns: Option<f64>, r: &Range<u64>| ns.map(|ns| ns / (r.end - r.start) as f64);
    let early_mean_ns = mean(early_ns, &early);
    let late_mean_ns = mean(late_ns, &late);
    let ratio = match (early_mean_ns, late_mean_ns) {
        (Some(e), Some(l)) if e > 0.0 => Some(l / e),
        _ => None,
    };
    Ok(CostReport {
        steps,
        early_window: early,
        late_window: late,
        early_mean_ns,
        late_mean_ns,
        ratio,
        memory_early,
        memory_late: engine_bytes(&state),
    })
}
