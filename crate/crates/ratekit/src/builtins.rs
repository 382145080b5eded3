//! Reference scenarios shipped with the binary (`builtin:NAME`). The JSON
//! sources live in `scenarios/` and double as examples of the format.

use crate::scenario::Scenario;
use crate::CliError;

pub const BUILTINS: [(&str, &str); 5] = [
    ("sn1d", include_str!("../scenarios/sn1d.json")),
    ("cubic1d", include_str!("../scenarios/cubic1d.json")),
    ("planar-excitable", include_str!("../scenarios/planar-excitable.json")),
    ("fold-btip", include_str!("../scenarios/fold-btip.json")),
    ("sn-pulse", include_str!("../scenarios/sn-pulse.json")),
];

pub fn names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

pub fn builtin(name: &str) -> Result<Scenario, CliError> {
    match BUILTINS.iter().find(|(n, _)| *n == name) {
        Some((_, text)) => Scenario::from_json(text),
        None => Err(CliError::Validation(format!("unknown builtin `{name}` (have: {})", names().join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_validate() {
        for name in names() {
            let s = builtin(name).unwrap();
            assert_eq!(s.name, name);
            s.validate().unwrap();
        }
    }
}
