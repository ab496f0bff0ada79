//! Boolean satisfaction of STL formulas by timed traces.
//!
//! Temporal operators quantify over the trace's sample times plus the
//! window endpoints `t+a` and `t+b` (clipped to the trace span). Atoms at
//! points between samples use linear interpolation.

use std::cell::RefCell;

use thiserror::Error;

use crate::formula::{Cmp, Formula, Interval, Operand, TimeBound};
use crate::trace::TimedTrace;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemanticsError {
    #[error("formula is not ground; unresolved parameters: {0:?}")]
    NotGround(Vec<String>),
    #[error("formula references channel `{0}` absent from the trace")]
    UnknownChannel(String),
    #[error("formula references parameter `{0}` with no slot")]
    UnknownParameter(String),
    #[error("time {0} is not a sample time of the trace")]
    NotSampleTime(f64),
    #[error("trace channels {found:?} differ from the compiled channels {expected:?}")]
    ChannelMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("expected {expected} parameter values, got {found}")]
    Arity { expected: usize, found: usize },
}

/// `sat(x, φ, t)` for a ground formula `φ` at sample time `t`.
pub fn satisfies(x: &TimedTrace, phi: &Formula, t: f64) -> Result<bool, SemanticsError> {
    let params = phi.params();
    if !params.is_empty() {
        return Err(SemanticsError::NotGround(params.into_iter().collect()));
    }
    let i = x
        .times()
        .binary_search_by(|s| s.total_cmp(&t))
        .map_err(|_| SemanticsError::NotSampleTime(t))?;
    Monitor::compile(phi, x.channels(), &[])?.eval_at(x, i, &[])
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Const(f64),
    Param(usize, f64),
}

impl Slot {
    fn get(self, values: &[f64]) -> f64 {
        match self {
            Slot::Const(c) => c,
            Slot::Param(k, sign) => sign * values[k],
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Window {
    lo: Slot,
    hi: Slot,
    lo_open: bool,
    hi_open: bool,
}

#[derive(Debug, Clone)]
enum Node {
    True,
    Atom {
        terms: Vec<(usize, f64)>,
        constant: f64,
        cmp: Cmp,
        rhs: Slot,
    },
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Eventually(Window, usize),
    Always(Window, usize),
    Until(Window, usize, usize),
}

/// A point where a subformula is evaluated.
#[derive(Debug, Clone, Copy)]
enum At {
    Sample(usize),
    Real(f64),
}

/// A formula compiled against a channel layout and an ordered list of
/// parameter slots, evaluated repeatedly with different parameter values.
#[derive(Debug, Clone)]
pub struct Monitor {
    nodes: Vec<Node>,
    root: usize,
    channels: Vec<String>,
    n_params: usize,
}

impl Monitor {
    pub fn compile(
        phi: &Formula,
        channels: &[String],
        params: &[String],
    ) -> Result<Self, SemanticsError> {
        let mut m = Monitor {
            nodes: Vec::new(),
            root: 0,
            channels: channels.to_vec(),
            n_params: params.len(),
        };
        m.root = m.add(phi, params)?;
        Ok(m)
    }

    fn slot_value(params: &[String], p: &str, sign: f64) -> Result<Slot, SemanticsError> {
        params
            .iter()
            .position(|q| q == p)
            .map(|k| Slot::Param(k, sign))
            .ok_or_else(|| SemanticsError::UnknownParameter(p.to_string()))
    }

    fn window(i: &Interval, params: &[String]) -> Result<Window, SemanticsError> {
        let bound = |b: &TimeBound| match b {
            TimeBound::Const(c) => Ok(Slot::Const(*c)),
            TimeBound::Param(p) => Self::slot_value(params, p, 1.0),
        };
        Ok(Window {
            lo: bound(&i.lo)?,
            hi: bound(&i.hi)?,
            lo_open: i.lo_open,
            hi_open: i.hi_open,
        })
    }

    fn add(&mut self, phi: &Formula, params: &[String]) -> Result<usize, SemanticsError> {
        let node = match phi {
            Formula::True => Node::True,
            Formula::Atom(a) => {
                let terms = a
                    .expr
                    .terms
                    .iter()
                    .map(|(c, name)| {
                        self.channels
                            .iter()
                            .position(|ch| ch == name)
                            .map(|k| (k, *c))
                            .ok_or_else(|| SemanticsError::UnknownChannel(name.clone()))
                    })
                    .collect::<Result<_, _>>()?;
                let rhs = match &a.rhs {
                    Operand::Const(c) => Slot::Const(*c),
                    Operand::Param(p) => Self::slot_value(params, p, 1.0)?,
                    Operand::NegParam(p) => Self::slot_value(params, p, -1.0)?,
                };
                Node::Atom {
                    terms,
                    constant: a.expr.constant,
                    cmp: a.cmp,
                    rhs,
                }
            }
            Formula::Not(a) => Node::Not(self.add(a, params)?),
            Formula::And(a, b) => {
                let (a, b) = (self.add(a, params)?, self.add(b, params)?);
                Node::And(a, b)
            }
            Formula::Or(a, b) => {
                let (a, b) = (self.add(a, params)?, self.add(b, params)?);
                Node::Or(a, b)
            }
            Formula::Eventually(i, a) => {
                Node::Eventually(Self::window(i, params)?, self.add(a, params)?)
            }
            Formula::Always(i, a) => Node::Always(Self::window(i, params)?, self.add(a, params)?),
            Formula::Until(i, a, b) => {
                let w = Self::window(i, params)?;
                let (a, b) = (self.add(a, params)?, self.add(b, params)?);
                Node::Until(w, a, b)
            }
        };
        self.nodes.push(node);
        Ok(self.nodes.len() - 1)
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    /// Satisfaction at time 0.
    pub fn eval(&self, x: &TimedTrace, values: &[f64]) -> Result<bool, SemanticsError> {
        self.eval_at(x, 0, values)
    }

    /// Satisfaction at the `i`-th sample time.
    pub fn eval_at(
        &self,
        x: &TimedTrace,
        i: usize,
        values: &[f64],
    ) -> Result<bool, SemanticsError> {
        if x.channels() != self.channels.as_slice() {
            return Err(SemanticsError::ChannelMismatch {
                expected: self.channels.clone(),
                found: x.channels().to_vec(),
            });
        }
        if values.len() != self.n_params {
            return Err(SemanticsError::Arity {
                expected: self.n_params,
                found: values.len(),
            });
        }
        if i >= x.len() {
            return Err(SemanticsError::NotSampleTime(f64::NAN));
        }
        let ev = Evaluator {
            m: self,
            x,
            values,
            memo: RefCell::new(vec![0u8; self.nodes.len() * x.len()]),
        };
        Ok(ev.holds(self.root, At::Sample(i)))
    }
}

struct Evaluator<'a> {
    m: &'a Monitor,
    x: &'a TimedTrace,
    values: &'a [f64],
    // 0 = unknown, 1 = false, 2 = true; indexed by node * len + sample
    memo: RefCell<Vec<u8>>,
}

impl Evaluator<'_> {
    fn time(&self, at: At) -> f64 {
        match at {
            At::Sample(i) => self.x.times()[i],
            At::Real(t) => t,
        }
    }

    fn holds(&self, node: usize, at: At) -> bool {
        let At::Sample(i) = at else {
            return self.compute(node, at);
        };
        let key = node * self.x.len() + i;
        match self.memo.borrow()[key] {
            1 => return false,
            2 => return true,
            _ => {}
        }
        let v = self.compute(node, at);
        self.memo.borrow_mut()[key] = if v { 2 } else { 1 };
        v
    }

    fn channel_value(&self, ch: usize, at: At) -> f64 {
        match at {
            At::Sample(i) => self.x.value(i, ch),
            At::Real(t) => {
                let times = self.x.times();
                let k = times.partition_point(|&s| s <= t).saturating_sub(1);
                if k + 1 >= times.len() {
                    return self.x.value(times.len() - 1, ch);
                }
                let (t0, t1) = (times[k], times[k + 1]);
                let (v0, v1) = (self.x.value(k, ch), self.x.value(k + 1, ch));
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    fn compute(&self, node: usize, at: At) -> bool {
        match &self.m.nodes[node] {
            Node::True => true,
            Node::Atom {
                terms,
                constant,
                cmp,
                rhs,
            } => {
                let lhs = terms
                    .iter()
                    .fold(*constant, |acc, &(ch, c)| acc + c * self.channel_value(ch, at));
                cmp.holds(lhs, rhs.get(self.values))
            }
            Node::Not(a) => !self.holds(*a, at),
            Node::And(a, b) => self.holds(*a, at) && self.holds(*b, at),
            Node::Or(a, b) => self.holds(*a, at) || self.holds(*b, at),
            Node::Eventually(w, a) => self.candidates(*w, at).into_iter().any(|c| self.holds(*a, c)),
            Node::Always(w, a) => self.candidates(*w, at).into_iter().all(|c| self.holds(*a, c)),
            Node::Until(w, a, b) => self.until(*w, *a, *b, at),
        }
    }

    /// Locates `t` on the sample grid.
    fn point(&self, t: f64) -> At {
        match self.x.times().binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => At::Sample(i),
            Err(_) => At::Real(t),
        }
    }

    /// Quantified points of `t ⊕ I`, ascending.
    fn candidates(&self, w: Window, at: At) -> Vec<At> {
        let t = self.time(at);
        let span = self.x.span();
        let lo = t + w.lo.get(self.values);
        let mut hi = t + w.hi.get(self.values);
        let mut hi_open = w.hi_open;
        if hi > span {
            hi = span;
            hi_open = false;
        }
        if lo > hi || (lo == hi && (w.lo_open || hi_open)) {
            return Vec::new();
        }
        let times = self.x.times();
        let mut out = Vec::new();
        if !w.lo_open {
            out.push(self.point(lo));
        }
        let first = times.partition_point(|&s| s <= lo);
        let last = times.partition_point(|&s| s < hi);
        out.extend((first..last).map(At::Sample));
        if !hi_open && hi > lo {
            out.push(self.point(hi));
        }
        out
    }

    fn until(&self, w: Window, a: usize, b: usize, at: At) -> bool {
        let t = self.time(at);
        let times = self.x.times();
        let mut next = times.partition_point(|&s| s <= t);
        let mut checked_start = false;
        for c in self.candidates(w, at) {
            let tc = self.time(c);
            if tc > t {
                if !checked_start {
                    if !self.holds(a, at) {
                        return false;
                    }
                    checked_start = true;
                }
                while next < times.len() && times[next] < tc {
                    if !self.holds(a, At::Sample(next)) {
                        return false;
                    }
                    next += 1;
                }
            }
            if self.holds(b, c) {
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn trace(times: &[f64], xs: &[f64]) -> TimedTrace {
        TimedTrace::new(
            times.to_vec(),
            xs.iter().map(|&v| vec![v]).collect(),
            vec!["x".into()],
        )
        .unwrap()
    }

    fn constant(v: f64, span: f64, n: usize) -> TimedTrace {
        let times: Vec<f64> = (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect();
        trace(&times, &vec![v; n])
    }

    fn sat(x: &TimedTrace, text: &str) -> bool {
        satisfies(x, &parse_formula(text).unwrap(), 0.0).unwrap()
    }

    #[test]
    fn constant_signal_always() {
        let x = constant(0.5, 10.0, 11);
        assert!(sat(&x, "G[0,10](x > 0.4)"));
        assert!(!sat(&x, "G[0,10](x > 0.6)"));
    }

    #[test]
    fn interpolates_at_window_endpoints() {
        // x ramps 0 -> 10 over [0, 1]; at t = 0.25 it is 2.5
        let x = trace(&[0.0, 1.0], &[0.0, 10.0]);
        assert!(sat(&x, "F[0.25,0.25](x >= 2.5)"));
        assert!(!sat(&x, "F[0.25,0.25](x > 2.5)"));
        assert!(sat(&x, "G[0,0.3](x <= 3)"));
        assert!(!sat(&x, "G[0,0.31](x <= 3)"));
    }

    #[test]
    fn open_bounds_exclude_endpoints() {
        let x = trace(&[0.0, 1.0, 2.0], &[5.0, 0.0, 0.0]);
        assert!(sat(&x, "F[0,1](x > 1)"));
        assert!(!sat(&x, "F(0,1](x > 1)"));
        let y = trace(&[0.0, 1.0, 2.0], &[0.0, 0.0, 5.0]);
        assert!(sat(&y, "F[0,2](x > 1)"));
        assert!(!sat(&y, "F[0,2)(x > 1)"));
        // clipped to the trace end: the end point counts as included
        assert!(sat(&y, "F[0,7)(x > 1)"));
    }

    #[test]
    fn empty_windows() {
        let x = constant(1.0, 2.0, 3);
        assert!(!sat(&x, "F[5,6](x > 0)"));
        assert!(sat(&x, "G[5,6](x < 0)"));
    }

    #[test]
    fn until_requires_left_operand_before_witness() {
        let x = trace(&[0.0, 1.0, 2.0, 3.0], &[1.0, 1.0, 0.0, 5.0]);
        // x > 4 first at t = 3 but x > 0.5 fails at t = 2
        assert!(!sat(&x, "U[0,3](x > 0.5, x > 4)"));
        assert!(sat(&x, "U[0,3](x > -1, x > 4)"));
        // witness at t = 0 needs nothing of the left operand
        assert!(sat(&x, "U[0,3](x > 9, x > 0.5)"));
        assert!(sat(&x, "U[0,3](x > 0.5, x < 0.5)"));
    }

    #[test]
    fn nested_operators_at_non_sample_points() {
        // inner F evaluated at t = 0.5, between samples
        let x = trace(&[0.0, 1.0, 2.0], &[0.0, 0.0, 3.0]);
        assert!(sat(&x, "F[0.5,0.5](F[0,1.5](x > 2))"));
        assert!(!sat(&x, "F[0.5,0.5](F[0,1](x > 2))"));
    }

    #[test]
    fn errors() {
        let x = constant(1.0, 1.0, 2);
        let f = parse_formula("F(y > 0)").unwrap();
        assert!(matches!(
            satisfies(&x, &f, 0.0),
            Err(SemanticsError::UnknownChannel(_))
        ));
        let g = parse_formula("F(x > c)").unwrap();
        assert!(matches!(
            satisfies(&x, &g, 0.0),
            Err(SemanticsError::NotGround(_))
        ));
        let h = parse_formula("F(x > 0)").unwrap();
        assert!(matches!(
            satisfies(&x, &h, 0.3),
            Err(SemanticsError::NotSampleTime(_))
        ));
        assert!(satisfies(&x, &h, 1.0).unwrap());
    }

    #[test]
    fn monitor_with_parameter_slots() {
        let x = constant(0.5, 10.0, 11);
        let f = parse_formula("G[0,tau](x > c)").unwrap();
        let m = Monitor::compile(&f, x.channels(), &["c".into(), "tau".into()]).unwrap();
        assert!(m.eval(&x, &[0.4, 10.0]).unwrap());
        assert!(!m.eval(&x, &[0.5, 10.0]).unwrap());
        assert!(m.eval(&x, &[0.6, 0.0]).is_ok());
        assert!(matches!(
            m.eval(&x, &[0.6]),
            Err(SemanticsError::Arity { .. })
        ));
    }
}
