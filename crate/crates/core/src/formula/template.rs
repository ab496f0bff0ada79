use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{parse_formula, Formula, FormulaError, Interval, Occurrence, TimeBound};
use crate::projection::{ParameterSpace, Valuation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Value,
    Time,
}

impl ParamKind {
    pub fn name(self) -> &'static str {
        match self {
            ParamKind::Value => "value",
            ParamKind::Time => "time",
        }
    }
}

/// `Plus`: increasing the parameter weakens the formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Polarity {
    pub fn symbol(self) -> char {
        match self {
            Polarity::Plus => '+',
            Polarity::Minus => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDecl {
    pub name: String,
    pub kind: ParamKind,
    pub polarity: Polarity,
    pub lo: f64,
    pub hi: f64,
    pub epsilon: f64,
}

impl ParameterDecl {
    pub fn new(
        name: impl Into<String>,
        kind: ParamKind,
        polarity: Polarity,
        lo: f64,
        hi: f64,
        epsilon: f64,
    ) -> Self {
        Self {
            name: name.into(),
            kind,
            polarity,
            lo,
            hi,
            epsilon,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    /// Domain end that makes the formula hardest to satisfy.
    pub fn strongest(&self) -> f64 {
        match self.polarity {
            Polarity::Plus => self.lo,
            Polarity::Minus => self.hi,
        }
    }

    /// Domain end that makes the formula easiest to satisfy.
    pub fn weakest(&self) -> f64 {
        match self.polarity {
            Polarity::Plus => self.hi,
            Polarity::Minus => self.lo,
        }
    }

    fn check(&self) -> Result<(), String> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(format!("domain of `{}` must be finite", self.name));
        }
        if !(self.lo < self.hi) {
            return Err(format!("domain of `{}` needs lo < hi", self.name));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.hi - self.lo) {
            return Err(format!(
                "epsilon of `{}` must lie in (0, hi - lo)",
                self.name
            ));
        }
        if self.kind == ParamKind::Time && self.lo < 0.0 {
            return Err(format!("time parameter `{}` needs lo >= 0", self.name));
        }
        Ok(())
    }
}

/// A parametric formula with ordered parameter declarations. The order of
/// `params` is the lexicographic priority used by projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PstlTemplate {
    name: String,
    formula: Formula,
    params: Vec<ParameterDecl>,
}

impl PstlTemplate {
    pub fn new(
        name: impl Into<String>,
        formula: Formula,
        params: Vec<ParameterDecl>,
    ) -> Result<Self, FormulaError> {
        if params.is_empty() {
            return Err(FormulaError::NoParameters);
        }
        let mut by_name = BTreeMap::new();
        for (i, d) in params.iter().enumerate() {
            if by_name.insert(d.name.as_str(), d).is_some() {
                return Err(FormulaError::DuplicateParameter(d.name.clone()));
            }
            d.check()
                .map_err(|msg| FormulaError::BadDeclaration { line: i + 1, msg })?;
        }

        let mut referenced = BTreeSet::new();
        let mut problem = None;
        formula.visit_params(&mut |p, occ| {
            referenced.insert(p.to_string());
            if problem.is_some() {
                return;
            }
            problem = match by_name.get(p) {
                None => Some(FormulaError::UndeclaredParameter(p.to_string())),
                Some(d) => {
                    let used = match occ {
                        Occurrence::Value => ParamKind::Value,
                        Occurrence::Time => ParamKind::Time,
                    };
                    (used != d.kind).then(|| FormulaError::KindMismatch {
                        name: p.to_string(),
                        used: used.name(),
                        declared: d.kind.name(),
                    })
                }
            };
        });
        if let Some(e) = problem {
            return Err(e);
        }
        if let Some(d) = params.iter().find(|d| !referenced.contains(&d.name)) {
            return Err(FormulaError::UnreferencedParameter(d.name.clone()));
        }
        for f in formula.subformulas() {
            if let Formula::Eventually(i, _) | Formula::Always(i, _) | Formula::Until(i, _, _) = f
            {
                check_interval_domains(i, &by_name)?;
            }
        }
        Ok(Self {
            name: name.into(),
            formula,
            params,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn params(&self) -> &[ParameterDecl] {
        &self.params
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|d| d.name.clone()).collect()
    }

    pub fn decl(&self, name: &str) -> Option<&ParameterDecl> {
        self.params.iter().find(|d| d.name == name)
    }

    pub fn space(&self) -> ParameterSpace {
        ParameterSpace::new(self.params.clone())
    }

    /// Ground instance of the template at `v`.
    pub fn instantiate(&self, v: &Valuation) -> Result<Formula, FormulaError> {
        match v {
            Valuation::Top => Err(FormulaError::Sentinel("top")),
            Valuation::Bottom => Err(FormulaError::Sentinel("bottom")),
            Valuation::Point(map) => self.instantiate_map(map),
        }
    }

    pub fn instantiate_map(&self, map: &BTreeMap<String, f64>) -> Result<Formula, FormulaError> {
        for d in &self.params {
            let value = *map
                .get(&d.name)
                .ok_or_else(|| FormulaError::MissingAssignment(d.name.clone()))?;
            if !d.contains(value) {
                return Err(FormulaError::OutOfDomain {
                    name: d.name.clone(),
                    value,
                    lo: d.lo,
                    hi: d.hi,
                });
            }
        }
        Ok(self.formula.substitute(&|p| map.get(p).copied()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, FormulaError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| FormulaError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let mut t: PstlTemplate = text.parse()?;
        if t.name.is_empty() {
            t.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(t)
    }
}

fn check_interval_domains(
    i: &Interval,
    decls: &BTreeMap<&str, &ParameterDecl>,
) -> Result<(), FormulaError> {
    if i.constant_bounds().is_some() {
        return i.check_constant();
    }
    // largest possible lower bound against smallest possible upper bound
    let max_lo = match &i.lo {
        TimeBound::Const(c) => *c,
        TimeBound::Param(p) => decls[p.as_str()].hi,
    };
    let min_hi = match &i.hi {
        TimeBound::Const(c) => *c,
        TimeBound::Param(p) => decls[p.as_str()].lo,
    };
    if max_lo > min_hi {
        return Err(FormulaError::ReversedInterval {
            lo: max_lo,
            hi: min_hi,
        });
    }
    if max_lo == min_hi && (i.lo_open || i.hi_open) {
        return Err(FormulaError::EmptyInterval(max_lo));
    }
    Ok(())
}

fn parse_number(tok: &str, line: usize, what: &str) -> Result<f64, FormulaError> {
    tok.parse().map_err(|_| FormulaError::BadDeclaration {
        line,
        msg: format!("{what} `{tok}` is not a number"),
    })
}

fn parse_decl(text: &str, line: usize) -> Result<ParameterDecl, FormulaError> {
    let bad = |msg: String| FormulaError::BadDeclaration { line, msg };
    let fields: Vec<&str> = text.split_whitespace().collect();
    let [name, kind, pol, lo, hi, eps] = fields[..] else {
        return Err(bad(format!(
            "expected `name kind polarity lo hi epsilon`, got {} fields",
            fields.len()
        )));
    };
    let kind = match kind {
        "value" => ParamKind::Value,
        "time" => ParamKind::Time,
        other => return Err(bad(format!("unknown kind `{other}`"))),
    };
    let polarity = match pol {
        "+" => Polarity::Plus,
        "-" | "−" => Polarity::Minus,
        other => return Err(bad(format!("unknown polarity `{other}`"))),
    };
    let decl = ParameterDecl {
        name: name.to_string(),
        kind,
        polarity,
        lo: parse_number(lo, line, "lower bound")?,
        hi: parse_number(hi, line, "upper bound")?,
        epsilon: parse_number(eps, line, "epsilon")?,
    };
    decl.check().map_err(bad)?;
    Ok(decl)
}

impl FromStr for PstlTemplate {
    type Err = FormulaError;

    /// Template file syntax: optional `name:` line, a `params:` block with
    /// one declaration per line, then `formula:` followed by the formula
    /// (possibly spanning several lines). `#` starts a comment.
    fn from_str(text: &str) -> Result<Self, FormulaError> {
        enum Section {
            Head,
            Params,
            Formula,
        }
        let mut section = Section::Head;
        let mut name = String::new();
        let mut params = Vec::new();
        let mut formula_text = String::new();
        let mut saw_params = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("name:") {
                name = rest.trim().to_string();
                continue;
            }
            if let Some(rest) = line.strip_prefix("params:") {
                saw_params = true;
                section = Section::Params;
                if !rest.trim().is_empty() {
                    params.push(parse_decl(rest, line_no)?);
                }
                continue;
            }
            if let Some(rest) = line.strip_prefix("formula:") {
                section = Section::Formula;
                formula_text.push_str(rest);
                formula_text.push(' ');
                continue;
            }
            match section {
                Section::Head => {
                    return Err(FormulaError::BadDeclaration {
                        line: line_no,
                        msg: "expected `name:`, `params:` or `formula:`".into(),
                    })
                }
                Section::Params => params.push(parse_decl(line, line_no)?),
                Section::Formula => {
                    formula_text.push_str(line);
                    formula_text.push(' ');
                }
            }
        }
        if formula_text.trim().is_empty() {
            return Err(FormulaError::BadDeclaration {
                line: text.lines().count().max(1),
                msg: "missing `formula:` section".into(),
            });
        }
        let formula = parse_formula(formula_text.trim())?;
        if !saw_params || params.is_empty() {
            return Err(FormulaError::NoParameters);
        }
        PstlTemplate::new(name, formula, params)
    }
}

impl fmt::Display for PstlTemplate {
    /// Writes the template in its file syntax.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.name.is_empty() {
            writeln!(f, "name: {}", self.name)?;
        }
        writeln!(f, "params:")?;
        for d in &self.params {
            writeln!(
                f,
                "  {} {} {} {} {} {}",
                d.name,
                d.kind.name(),
                d.polarity.symbol(),
                d.lo,
                d.hi,
                d.epsilon
            )?;
        }
        writeln!(f, "formula:")?;
        writeln!(f, "  {}", self.formula)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OVERSHOOT: &str = "\
name: overshoot
params:
  a   value -  -1.5 1.5 0.01   # overshoot magnitude
  tau time  +   0   5   0.05
formula:
  F(lane_change > 0.5 & F[0, tau](x - x_ref > a))
";

    fn point(pairs: &[(&str, f64)]) -> Valuation {
        Valuation::Point(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }

    #[test]
    fn parses_overshoot_file() {
        let t: PstlTemplate = OVERSHOOT.parse().unwrap();
        assert_eq!(t.name(), "overshoot");
        assert_eq!(t.param_names(), vec!["a", "tau"]);
        assert_eq!(t.params()[0].polarity, Polarity::Minus);
        assert_eq!(t.params()[1].kind, ParamKind::Time);
        let again: PstlTemplate = t.to_string().parse().unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn ground_formula_is_not_a_template() {
        let err = "params:\nformula: G[0,5](x > 0)".parse::<PstlTemplate>().unwrap_err();
        assert_eq!(err.to_string(), "no parameters declared");
        assert!(Formula::parse_ground("G[0,5](x > 0)").is_ok());
    }

    #[test]
    fn instantiate_always_template() {
        let f = parse_formula("G[0,tau](x > c)").unwrap();
        let t = PstlTemplate::new(
            "g",
            f,
            vec![
                ParameterDecl::new("tau", ParamKind::Time, Polarity::Minus, 0.0, 20.0, 0.1),
                ParameterDecl::new("c", ParamKind::Value, Polarity::Minus, -5.0, 5.0, 0.1),
            ],
        )
        .unwrap();
        let g = t.instantiate(&point(&[("tau", 10.0), ("c", 1.2)])).unwrap();
        assert_eq!(g.to_string(), "G[0,10](x > 1.2)");
        assert!(g.is_ground());
    }

    #[test]
    fn instantiate_overshoot_first_conjunct() {
        let t: PstlTemplate = OVERSHOOT.parse().unwrap();
        let g = t.instantiate(&point(&[("a", -1.3), ("tau", 3.3)])).unwrap();
        assert_eq!(
            g.to_string(),
            "F(lane_change > 0.5 & F[0,3.3](x - x_ref > -1.3))"
        );
    }

    #[test]
    fn instantiate_errors() {
        let t: PstlTemplate = OVERSHOOT.parse().unwrap();
        assert!(matches!(
            t.instantiate(&point(&[("a", 0.0)])),
            Err(FormulaError::MissingAssignment(p)) if p == "tau"
        ));
        assert!(matches!(
            t.instantiate(&point(&[("a", 0.0), ("tau", 9.0)])),
            Err(FormulaError::OutOfDomain { .. })
        ));
        assert!(matches!(
            t.instantiate(&Valuation::Top),
            Err(FormulaError::Sentinel(_))
        ));
    }

    #[test]
    fn declaration_errors() {
        let undeclared = "params:\n a value - 0 1 0.1\nformula: F(x > a & y > b)";
        assert!(matches!(
            undeclared.parse::<PstlTemplate>(),
            Err(FormulaError::UndeclaredParameter(p)) if p == "b"
        ));
        let unreferenced = "params:\n a value - 0 1 0.1\n b value - 0 1 0.1\nformula: F(x > a)";
        assert!(matches!(
            unreferenced.parse::<PstlTemplate>(),
            Err(FormulaError::UnreferencedParameter(p)) if p == "b"
        ));
        let kind = "params:\n a value - 0 1 0.1\nformula: F[0,a](x > 0)";
        assert!(matches!(
            kind.parse::<PstlTemplate>(),
            Err(FormulaError::KindMismatch { .. })
        ));
        let dup = "params:\n a value - 0 1 0.1\n a value - 0 1 0.1\nformula: F(x > a)";
        assert!(matches!(
            dup.parse::<PstlTemplate>(),
            Err(FormulaError::DuplicateParameter(_))
        ));
        let eps = "params:\n a value - 0 1 2\nformula: F(x > a)";
        assert!(matches!(
            eps.parse::<PstlTemplate>(),
            Err(FormulaError::BadDeclaration { line: 2, .. })
        ));
        let neg_time = "params:\n w time + -1 1 0.1\nformula: F[0,w](x > 0)";
        assert!(neg_time.parse::<PstlTemplate>().is_err());
        let reversed = "params:\n w time + 0 1 0.1\nformula: F[2,w](x > 0)";
        assert!(matches!(
            reversed.parse::<PstlTemplate>(),
            Err(FormulaError::ReversedInterval { .. })
        ));
    }

    #[test]
    fn instantiate_is_idempotent_on_ground_output() {
        let t: PstlTemplate = OVERSHOOT.parse().unwrap();
        let v = point(&[("a", 0.25), ("tau", 1.0)]);
        let g = t.instantiate(&v).unwrap();
        assert_eq!(g.substitute(&|_| Some(99.0)), g);
    }
}
