//! Named scenario templates for the published test protocol. Each one
//! fixes the scheme, controller and parameter overrides; the initial pose
//! is left at its default and is replaced per task by the suite runner.

use crate::error::{Error, Result};
use crate::harness::ScenarioConfig;
use crate::io::parse_scenario;

const PRESETS: [(&str, &str); 28] = [
    ("test1", include_str!("../presets/test1.json")),
    ("test2", include_str!("../presets/test2.json")),
    ("test3", include_str!("../presets/test3.json")),
    ("test4", include_str!("../presets/test4.json")),
    ("test5", include_str!("../presets/test5.json")),
    ("test6", include_str!("../presets/test6.json")),
    ("test7", include_str!("../presets/test7.json")),
    ("test8", include_str!("../presets/test8.json")),
    ("test9", include_str!("../presets/test9.json")),
    ("test10", include_str!("../presets/test10.json")),
    ("test11", include_str!("../presets/test11.json")),
    ("test12", include_str!("../presets/test12.json")),
    ("test13", include_str!("../presets/test13.json")),
    ("test14", include_str!("../presets/test14.json")),
    ("test15", include_str!("../presets/test15.json")),
    ("test16", include_str!("../presets/test16.json")),
    ("test17", include_str!("../presets/test17.json")),
    ("test18", include_str!("../presets/test18.json")),
    ("test19", include_str!("../presets/test19.json")),
    ("test20", include_str!("../presets/test20.json")),
    ("test21", include_str!("../presets/test21.json")),
    ("test22", include_str!("../presets/test22.json")),
    ("test23", include_str!("../presets/test23.json")),
    ("test24", include_str!("../presets/test24.json")),
    ("test25", include_str!("../presets/test25.json")),
    ("test26", include_str!("../presets/test26.json")),
    ("test27", include_str!("../presets/test27.json")),
    ("test28", include_str!("../presets/test28.json")),
];

/// Names of every preset, in protocol order.
pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Raw JSON of a preset.
pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let src = preset_source(name).ok_or_else(|| {
        let known: Vec<&str> = preset_names().collect();
        Error::config("test", format!("unknown preset `{name}`; known presets: {}", known.join(", ")))
    })?;
    parse_scenario(src)
}
