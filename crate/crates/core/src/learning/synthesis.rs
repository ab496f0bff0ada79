use super::{CornerSubset, Hyperbox, LearnError};
use crate::formula::{Formula, PstlTemplate};

/// A ground formula describing the traces that project into a box.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedFormula {
    pub formula: Formula,
    pub hyperbox: Hyperbox,
    pub corners: CornerSubset,
    pub size: usize,
}

/// `φ(ν_w) ∧ ¬φ(c₁) ∧ … ∧ ¬φ(c_k)` over the chosen corners, left-nested.
pub fn synthesize_formula(
    tpl: &PstlTemplate,
    b: &Hyperbox,
    corners: &CornerSubset,
) -> Result<SynthesizedFormula, LearnError> {
    if corners.dims() != b.dims() {
        return Err(LearnError::Arity {
            what: "corner bit-vectors",
            expected: b.dims(),
            found: corners.dims(),
        });
    }
    let space = b.space();
    let mut parts = vec![tpl.instantiate(&b.weak_valuation())?];
    for bits in corners.corners() {
        let c = space.valuation(&b.corner(bits));
        parts.push(Formula::not(tpl.instantiate(&c)?));
    }
    let formula = Formula::conjunction(parts).expect("at least the weak corner");
    let size = formula.size();
    Ok(SynthesizedFormula {
        formula,
        hyperbox: b.clone(),
        corners: corners.clone(),
        size,
    })
}

/// Symbol count of the synthesized formula.
pub fn formula_size(psi: &SynthesizedFormula) -> usize {
    psi.formula.size()
}
