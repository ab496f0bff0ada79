use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{TimedTrace, TraceError, TraceSet};

// Absolute slack for window boundaries computed as `k * offset`.
const WINDOW_TOL: f64 = 1e-9;

/// One preprocessing step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocess {
    /// Cut each trace into windows of `size` seconds every `offset` seconds.
    SlidingWindow { size: f64, offset: f64 },
    /// Append the `order`-th discrete derivative of `channel` as `name`.
    Derivative {
        channel: String,
        order: u8,
        name: String,
    },
    /// Append `channel` minus its centered rolling median as `name`.
    RollingMedian {
        channel: String,
        window: f64,
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessOutput {
    pub traces: TraceSet,
    pub warnings: Vec<String>,
}

/// Applies one preprocessing step to every trace of the set.
pub fn preprocess(ts: &TraceSet, step: &Preprocess) -> Result<PreprocessOutput, TraceError> {
    match step {
        Preprocess::SlidingWindow { size, offset } => sliding_windows(ts, *size, *offset),
        Preprocess::Derivative {
            channel,
            order,
            name,
        } => {
            if !(1..=2).contains(order) {
                return Err(TraceError::BadParameter {
                    name: "order".into(),
                    reason: format!("derivative order must be 1 or 2, got {order}"),
                });
            }
            append_channel(ts, channel, name, |tr, col| {
                let mut d = first_difference(tr.times(), col);
                for _ in 1..*order {
                    d = first_difference(tr.times(), &d);
                }
                d
            })
        }
        Preprocess::RollingMedian {
            channel,
            window,
            name,
        } => {
            if !(*window > 0.0) {
                return Err(TraceError::BadParameter {
                    name: "window".into(),
                    reason: "rolling median window must be positive".into(),
                });
            }
            append_channel(ts, channel, name, |tr, col| {
                detrend_rolling_median(tr.times(), col, *window)
            })
        }
    }
}

fn append_channel<F>(
    ts: &TraceSet,
    channel: &str,
    name: &str,
    derive: F,
) -> Result<PreprocessOutput, TraceError>
where
    F: Fn(&TimedTrace, &[f64]) -> Vec<f64> + Sync,
{
    if !ts.channels().iter().any(|c| c == channel) {
        return Err(TraceError::UnknownChannel(channel.to_string()));
    }
    if ts.channels().iter().any(|c| c == name) {
        return Err(TraceError::DuplicateChannel(name.to_string()));
    }
    let rows: Vec<(String, TimedTrace)> = ts
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(id, tr)| {
            let col = tr.column_by_name(channel)?;
            let extra = derive(tr, &col);
            Ok(((*id).clone(), tr.with_channel(name, extra)?))
        })
        .collect::<Result<_, TraceError>>()?;
    let mut channels = ts.channels().to_vec();
    channels.push(name.to_string());
    let mut out = TraceSet::new(channels);
    for (id, tr) in rows {
        out.insert(id, tr)?;
    }
    Ok(PreprocessOutput {
        traces: out,
        warnings: Vec::new(),
    })
}

/// Forward differences; the last sample repeats its predecessor's value so
/// the length is preserved. A single-sample signal has derivative 0.
pub(crate) fn first_difference(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut d: Vec<f64> = (0..n - 1)
        .map(|i| (values[i + 1] - values[i]) / (times[i + 1] - times[i]))
        .collect();
    d.push(d[n - 2]);
    d
}

fn detrend_rolling_median(times: &[f64], values: &[f64], window: f64) -> Vec<f64> {
    let half = window / 2.0;
    let mut buf = Vec::new();
    (0..values.len())
        .map(|i| {
            let lo = times.partition_point(|&t| t < times[i] - half);
            let hi = times.partition_point(|&t| t <= times[i] + half);
            buf.clear();
            buf.extend_from_slice(&values[lo..hi]);
            buf.sort_by(f64::total_cmp);
            let m = buf.len();
            let median = if m % 2 == 1 {
                buf[m / 2]
            } else {
                0.5 * (buf[m / 2 - 1] + buf[m / 2])
            };
            values[i] - median
        })
        .collect()
}

/// Number of window positions for a trace of the given span.
pub(crate) fn window_count(span: f64, size: f64, offset: f64) -> usize {
    if span + WINDOW_TOL < size {
        return 0;
    }
    (((span - size) / offset) + WINDOW_TOL).floor().max(0.0) as usize + 1
}

fn sliding_windows(ts: &TraceSet, size: f64, offset: f64) -> Result<PreprocessOutput, TraceError> {
    if !(size > 0.0) || !size.is_finite() {
        return Err(TraceError::BadParameter {
            name: "size".into(),
            reason: "window size must be positive".into(),
        });
    }
    if !(offset > 0.0) || !offset.is_finite() {
        return Err(TraceError::BadParameter {
            name: "offset".into(),
            reason: "window offset must be positive".into(),
        });
    }
    let per_trace: Vec<(Vec<(String, TimedTrace)>, Vec<String>)> = ts
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(id, tr)| {
            let mut warnings = Vec::new();
            let count = window_count(tr.span(), size, offset);
            if count == 0 {
                warnings.push(format!(
                    "trace `{id}` spans {}s, shorter than the {size}s window; skipped",
                    tr.span()
                ));
            }
            let mut windows = Vec::with_capacity(count);
            for k in 0..count {
                let start = k as f64 * offset;
                match tr.slice_rebased(start - WINDOW_TOL, start + size + WINDOW_TOL, 2) {
                    Some(w) => windows.push((format!("{id}_w{k}"), w)),
                    None => warnings.push(format!(
                        "window {k} of trace `{id}` has fewer than 2 samples; skipped"
                    )),
                }
            }
            (windows, warnings)
        })
        .collect();

    let mut out = TraceSet::new(ts.channels().to_vec());
    let mut warnings = Vec::new();
    for (windows, w) in per_trace {
        for (id, tr) in windows {
            out.insert(id, tr)?;
        }
        warnings.extend(w);
    }
    Ok(PreprocessOutput {
        traces: out,
        warnings,
    })
}
