//! Seeded generators for the synthetic corpora used by tests, demos and the
//! `synth` command.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::preprocess::first_difference;
use super::{TimedTrace, TraceError, TraceSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Lane change followed by a tracked response with configurable overshoot.
    Overshoot,
    /// Smooth rising step, with its second derivative as channel `ddx`.
    Step,
    /// Triangular pulse that returns to zero.
    Spike,
    /// Integer lane position with a handful of lane switches.
    LaneDwell,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Overshoot => "overshoot",
            Family::Step => "step",
            Family::Spike => "spike",
            Family::LaneDwell => "lane_dwell",
        }
    }
}

impl FromStr for Family {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "overshoot" => Ok(Family::Overshoot),
            "step" => Ok(Family::Step),
            "spike" => Ok(Family::Spike),
            "lane_dwell" => Ok(Family::LaneDwell),
            other => Err(TraceError::UnknownFamily(other.to_string())),
        }
    }
}

struct Params<'a> {
    given: &'a BTreeMap<String, f64>,
    known: BTreeSet<&'static str>,
}

impl<'a> Params<'a> {
    fn new(given: &'a BTreeMap<String, f64>) -> Self {
        Self {
            given,
            known: BTreeSet::new(),
        }
    }

    fn get(&mut self, name: &'static str, default: f64) -> f64 {
        self.known.insert(name);
        self.given.get(name).copied().unwrap_or(default)
    }

    fn positive(&mut self, name: &'static str, default: f64) -> Result<f64, TraceError> {
        let v = self.get(name, default);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(TraceError::BadParameter {
                name: name.into(),
                reason: format!("must be positive, got {v}"),
            })
        }
    }

    fn finish(self) -> Result<(), TraceError> {
        for k in self.given.keys() {
            if !self.known.contains(k.as_str()) {
                return Err(TraceError::BadParameter {
                    name: k.clone(),
                    reason: "not a parameter of this family".into(),
                });
            }
        }
        Ok(())
    }
}

/// Uniform draw in `center * (1 ± frac)`.
fn jitter(rng: &mut ChaCha8Rng, center: f64, frac: f64) -> f64 {
    if frac == 0.0 {
        center
    } else {
        center * (1.0 + frac * (2.0 * rng.random::<f64>() - 1.0))
    }
}

fn grid(horizon: f64, dt: f64) -> Vec<f64> {
    let n = (horizon / dt).round() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

/// Generates `count` traces of the given family. Output is a pure function of
/// `(family, params, count, seed)`; trace ids are `<family>_<index>`.
pub fn synth_traces(
    family: &str,
    params: &BTreeMap<String, f64>,
    count: usize,
    seed: u64,
) -> Result<TraceSet, TraceError> {
    let family: Family = family.parse()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Params::new(params);
    let (channels, builder): (Vec<&str>, Builder) = match family {
        Family::Overshoot => (vec!["x_ref", "lane_change", "x"], overshoot(&mut p)?),
        Family::Step => (vec!["x", "ddx"], step(&mut p)?),
        Family::Spike => (vec!["x"], spike(&mut p)?),
        Family::LaneDwell => (vec!["x"], lane_dwell(&mut p)?),
    };
    p.finish()?;
    let channels: Vec<String> = channels.into_iter().map(String::from).collect();
    let mut set = TraceSet::new(channels.clone());
    let width = (count.max(1) - 1).to_string().len();
    for i in 0..count {
        let (times, values) = builder(&mut rng);
        let tr = TimedTrace::from_flat(times, values, channels.clone())?;
        set.insert(format!("{}_{i:0width$}", family.name()), tr)?;
    }
    Ok(set)
}

type Builder = Box<dyn Fn(&mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>)>;

fn overshoot(p: &mut Params) -> Result<Builder, TraceError> {
    let horizon = p.positive("horizon", 10.0)?;
    let dt = p.positive("dt", 0.05)?;
    let step = p.get("step", 1.0);
    let amplitude = p.get("amplitude", 0.2);
    let amplitude_jitter = p.get("amplitude_jitter", 0.0);
    let settle = p.positive("settle", 1.0)?;
    let settle_jitter = p.get("settle_jitter", 0.1);
    let t_change = p.get("t_change", 2.0);
    let t_change_jitter = p.get("t_change_jitter", 0.5);
    let rise = p.positive("rise", 0.2)?;
    let tracking = p.get("tracking", 1.0);
    let wiggle = p.get("wiggle", 0.0);
    let noise = p.get("noise", 0.0);
    if !(0.0..horizon).contains(&t_change) {
        return Err(TraceError::BadParameter {
            name: "t_change".into(),
            reason: "lane change must happen inside the horizon".into(),
        });
    }
    let normal = Normal::new(0.0, noise.max(0.0)).expect("non-negative std");
    Ok(Box::new(move |rng| {
        let times = grid(horizon, dt);
        let tc_raw = t_change + t_change_jitter * (2.0 * rng.random::<f64>() - 1.0);
        let change = ((tc_raw / dt).round() as usize).clamp(1, times.len() - 1);
        let tc = times[change];
        let amp = jitter(rng, amplitude, amplitude_jitter);
        let peak = jitter(rng, settle, settle_jitter);
        let mut values = Vec::with_capacity(times.len() * 3);
        for (i, &t) in times.iter().enumerate() {
            let (x_ref, x) = if i < change {
                (0.0, wiggle * (4.0 * std::f64::consts::PI * t / tc).sin())
            } else {
                let s = t - tc;
                let base = tracking * step * (1.0 - (-s / rise).exp());
                let bump = amp * (s / peak) * (1.0 - s / peak).exp();
                (step, base + bump)
            };
            let lane_change = if i == change { 1.0 } else { 0.0 };
            let x = if noise > 0.0 { x + normal.sample(rng) } else { x };
            values.extend_from_slice(&[x_ref, lane_change, x]);
        }
        (times, values)
    }))
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

fn step(p: &mut Params) -> Result<Builder, TraceError> {
    let horizon = p.positive("horizon", 10.0)?;
    let dt = p.positive("dt", 0.05)?;
    let height = p.get("height", 1.0);
    let height_jitter = p.get("height_jitter", 0.0);
    let rise = p.positive("rise", 0.5)?;
    let rise_jitter = p.get("rise_jitter", 0.2);
    let t_step = p.get("t_step", 3.0);
    let t_step_jitter = p.get("t_step_jitter", 1.0);
    let noise = p.get("noise", 0.0);
    let normal = Normal::new(0.0, noise.max(0.0)).expect("non-negative std");
    Ok(Box::new(move |rng| {
        let times = grid(horizon, dt);
        let h = jitter(rng, height, height_jitter);
        let r = jitter(rng, rise, rise_jitter);
        let t0 = t_step + t_step_jitter * (2.0 * rng.random::<f64>() - 1.0);
        let x: Vec<f64> = times
            .iter()
            .map(|&t| {
                let v = h * smoothstep((t - t0) / r);
                if noise > 0.0 {
                    v + normal.sample(rng)
                } else {
                    v
                }
            })
            .collect();
        let ddx = first_difference(&times, &first_difference(&times, &x));
        let values = x.iter().zip(&ddx).flat_map(|(&a, &b)| [a, b]).collect();
        (times, values)
    }))
}

fn spike(p: &mut Params) -> Result<Builder, TraceError> {
    let horizon = p.positive("horizon", 10.0)?;
    let dt = p.positive("dt", 0.05)?;
    let height = p.get("height", 1.0);
    let height_jitter = p.get("height_jitter", 0.1);
    let width = p.positive("width", 1.0)?;
    let width_jitter = p.get("width_jitter", 0.2);
    Ok(Box::new(move |rng| {
        let times = grid(horizon, dt);
        let h = jitter(rng, height, height_jitter);
        let w = jitter(rng, width, width_jitter);
        let latest = (horizon - w).max(0.0);
        let start = rng.random::<f64>() * latest * 0.8 + latest * 0.1;
        let values = times
            .iter()
            .map(|&t| {
                let u = (t - start) / w;
                if (0.0..=1.0).contains(&u) {
                    h * (1.0 - (2.0 * u - 1.0).abs())
                } else {
                    0.0
                }
            })
            .collect();
        (times, values)
    }))
}

fn lane_dwell(p: &mut Params) -> Result<Builder, TraceError> {
    let horizon = p.positive("horizon", 60.0)?;
    let dt = p.positive("dt", 0.5)?;
    let switches = p.get("switches", 3.0).max(0.0) as usize;
    let dwell = p.positive("dwell", 10.0)?;
    Ok(Box::new(move |rng| {
        let times = grid(horizon, dt);
        let mut lane: f64 = [2.0, 3.0, 4.0][rng.random_range(0..3)];
        let mut switch_at = Vec::with_capacity(switches);
        let mut t = 0.0;
        for _ in 0..switches {
            t += dwell * (0.5 + rng.random::<f64>());
            switch_at.push(t);
        }
        let mut lanes = Vec::with_capacity(switches + 1);
        lanes.push(lane);
        for _ in 0..switches {
            let up = if lane <= 1.0 {
                true
            } else if lane >= 5.0 {
                false
            } else {
                rng.random::<bool>()
            };
            lane += if up { 1.0 } else { -1.0 };
            lanes.push(lane);
        }
        let values = times
            .iter()
            .map(|&t| lanes[switch_at.partition_point(|&s| s <= t)])
            .collect();
        (times, values)
    }))
}
