//! Figure presets. Each one is a config fragment holding only the values the
//! figure states; everything else keeps its documented default.

use crate::{Error, Result};

pub const PRESETS: [(&str, &str); 5] = [
    (
        "fig4",
        r#"scenario = "NAFD"

[nafd]
m = 40
k_d = 5
k_u = 5
n = 2
tau_c = 200
tau_up = 10
p_u = 0.1
p_p = 0.1
p_d = 1.0
se_floor = 0.2
n_t = 1
n_r = 1
si_db = 50.0
"#,
    ),
    (
        "fig6",
        r#"scenario = "NOMA"

[noma]
m = 20
l = 50
k_l = 2
n = 15
tau_c = 110
p_p = 0.1
p_d = 0.2
"#,
    ),
    (
        "fig8",
        r#"scenario = "EH"

[eh]
m = 50
n = 10
energy_floor = 1e-4
se_floor = 1.0
"#,
    ),
    (
        "fig9",
        r#"scenario = "PLS"

[pls]
m_values = [12, 24, 40, 48, 60, 80, 120]
total_antennas = 240
radii = [20.0, 40.0]
"#,
    ),
    (
        "fig10",
        r#"scenario = "RIS"

[ris]
m = 100
n_ris = 900
k = 10
tau_c = 200
tau_up = 5
p_direct = 0.2
p_p = 0.1
p_d = 0.5
"#,
    ),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.0).collect()
}

pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS.iter().find(|p| p.0.eq_ignore_ascii_case(name)).map(|p| p.1).ok_or_else(|| {
        Error::config("preset", format!("unknown preset `{name}`, expected one of {}", preset_names().join(", ")))
    })
}

pub fn preset_table(name: &str) -> Result<toml::Table> {
    let text = preset_text(name)?;
    toml::from_str(text).map_err(|e| Error::config(format!("preset {name}"), e.to_string()))
}

/// Every preset as it would appear in a config file.
pub fn dump() -> String {
    let mut s = String::new();
    for (name, text) in PRESETS {
        s.push_str(&format!("# preset {name}\n{text}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::super::config::{resolve_config, Scenario};
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for name in preset_names() {
            let c = resolve_config(None, Some(name), None).unwrap();
            assert_eq!(c.preset.as_deref(), Some(name));
        }
    }

    #[test]
    fn fig4_values() {
        let c = resolve_config(None, Some("fig4"), None).unwrap();
        let n = &c.nafd;
        assert_eq!(c.scenario, Some(Scenario::Nafd));
        assert_eq!((n.m, n.k_d, n.k_u, n.n, n.tau_c, n.tau_up), (40, 5, 5, 2, 200, 10));
        assert_eq!((n.p_u, n.p_p, n.p_d, n.si_db), (0.1, 0.1, 1.0, 50.0));
    }

    #[test]
    fn fig10_values() {
        let c = resolve_config(None, Some("FIG10"), None).unwrap();
        let r = &c.ris;
        assert_eq!((r.m, r.n_ris, r.k, r.tau_c, r.tau_up), (100, 900, 10, 200, 5));
        assert_eq!((r.p_direct, r.p_p, r.p_d), (0.2, 0.1, 0.5));
    }

    #[test]
    fn scenario_conflict_is_config_error() {
        let e = resolve_config(None, Some("fig6"), Some(Scenario::Ris)).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(preset_text("fig5").is_err());
    }
}
