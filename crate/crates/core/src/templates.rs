//! Template corpus shipped with the library.

use std::path::Path;

use crate::formula::{FormulaError, PstlTemplate};

const SOURCES: &[(&str, &str)] = &[
    ("overshoot", include_str!("../templates/overshoot.tpl")),
    ("step", include_str!("../templates/step.tpl")),
    ("overshoot_step", include_str!("../templates/overshoot_step.tpl")),
    ("spike", include_str!("../templates/spike.tpl")),
    ("lane_dwell_2", include_str!("../templates/lane_dwell_2.tpl")),
    ("lane_dwell_3", include_str!("../templates/lane_dwell_3.tpl")),
    ("lane_dwell_4", include_str!("../templates/lane_dwell_4.tpl")),
    ("avoid", include_str!("../templates/avoid.tpl")),
    ("reorient", include_str!("../templates/reorient.tpl")),
];

/// Prefix selecting a bundled template instead of a file path.
pub const BUILTIN_PREFIX: &str = "builtin:";

pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn builtin(name: &str) -> Option<PstlTemplate> {
    source(name).map(|s| s.parse().expect("bundled templates are valid"))
}

/// Loads `builtin:<name>` or a template file.
pub fn load(spec: &str, base: Option<&Path>) -> Result<PstlTemplate, FormulaError> {
    if let Some(name) = spec.strip_prefix(BUILTIN_PREFIX) {
        return builtin(name).ok_or_else(|| FormulaError::Io {
            path: spec.to_string(),
            msg: format!(
                "no bundled template `{name}`; available: {}",
                names().collect::<Vec<_>>().join(", ")
            ),
        });
    }
    let path = match base {
        Some(b) if Path::new(spec).is_relative() => b.join(spec),
        _ => Path::new(spec).to_path_buf(),
    };
    PstlTemplate::from_file(path)
}
