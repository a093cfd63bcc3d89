//! Experiment files.
//!
//! A config is a TOML document (or the equivalent JSON object). Top-level
//! keys select the scenario and the run; one section per scenario holds the
//! network parameters. Every key is optional except `scenario`, which may also
//! come from a preset or the command line. Unknown keys are rejected.
//!
//! ```toml
//! scenario = "NAFD"
//! preset = "fig4"        # optional base; keys below override it
//! seeds = 50
//! master_seed = 7
//! workers = 4            # 0 uses every core
//! trials = 2000          # Monte Carlo draws where a scenario needs them
//! schemes = ["NAFD", "FD", "HD"]
//! out = "nafd.csv"
//! cdf = "se:sum"         # metric, or metric:sum / metric:min / metric:mean
//!
//! [nafd]
//! m = 10
//! area_side = 500.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::presets;
use crate::casestudies::eh::EhSetup;
use crate::casestudies::nafd::NafdSetup;
use crate::casestudies::noma::NomaSetup;
use crate::casestudies::pls::PlsSetup;
use crate::casestudies::ris::RisSetup;
use crate::casestudies::Radio;
use crate::netmodel::PathLossParams;
use crate::ulink::CombinerScheme;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    Dl,
    Ul,
    Nafd,
    Noma,
    Pls,
    Eh,
    Ris,
    Lemmas,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Dl,
        Scenario::Ul,
        Scenario::Nafd,
        Scenario::Noma,
        Scenario::Pls,
        Scenario::Eh,
        Scenario::Ris,
        Scenario::Lemmas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Dl => "DL",
            Scenario::Ul => "UL",
            Scenario::Nafd => "NAFD",
            Scenario::Noma => "NOMA",
            Scenario::Pls => "PLS",
            Scenario::Eh => "EH",
            Scenario::Ris => "RIS",
            Scenario::Lemmas => "LEMMAS",
        }
    }

    /// Scheme labels accepted in `schemes`, in output order.
    pub fn schemes(self) -> Vec<&'static str> {
        use crate::casestudies::{eh::EhScheme, nafd::NafdScheme, noma::Pairing, ris::RisScheme};
        match self {
            Scenario::Dl => crate::dlink::PrecoderScheme::ALL.iter().map(|p| p.label()).collect(),
            Scenario::Ul => vec!["L1", "L2", "L3", "L4"],
            Scenario::Nafd => NafdScheme::ALL.iter().map(|s| s.label()).collect(),
            Scenario::Noma => Pairing::ALL.iter().map(|p| p.label()).chain(["OMA"]).collect(),
            Scenario::Pls => vec!["PPZF", "MRT"],
            Scenario::Eh => EhScheme::ALL.iter().map(|s| s.label()).collect(),
            Scenario::Ris => RisScheme::ALL.iter().map(|s| s.label()).collect(),
            Scenario::Lemmas => vec!["lemmas"],
        }
    }

    /// Schemes run when the config lists none.
    pub fn default_schemes(self) -> Vec<&'static str> {
        match self {
            Scenario::Dl => vec!["CB"],
            s => s.schemes(),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config("scenario", format!("unknown scenario `{s}`")))
    }
}

impl Serialize for Scenario {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| {
            let names: Vec<_> = Scenario::ALL.iter().map(|x| x.name()).collect();
            serde::de::Error::custom(format!("unknown scenario `{s}`, expected one of {}", names.join(", ")))
        })
    }
}

/// Downlink with a chosen precoder and equal power shares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DlSetup {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub area_side: f64,
    pub tau_c: usize,
    pub tau_up: usize,
    pub p_p: f64,
    pub p_d: f64,
    /// LSF share captured by strong sets for PZF and PPZF.
    pub strong_fraction: f64,
    /// Use the closed form for CB instead of Monte Carlo.
    pub closed_form_cb: bool,
    pub radio: Radio,
    pub pathloss: PathLossParams,
}

impl Default for DlSetup {
    fn default() -> Self {
        DlSetup {
            m: 16,
            k: 4,
            n: 4,
            area_side: 500.0,
            tau_c: 200,
            tau_up: 4,
            p_p: 0.1,
            p_d: 0.2,
            strong_fraction: 0.95,
            closed_form_cb: true,
            radio: Radio::default(),
            pathloss: PathLossParams::default(),
        }
    }
}

/// Uplink at the four cooperation levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UlSetup {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub area_side: f64,
    pub tau_c: usize,
    pub tau_up: usize,
    pub p_p: f64,
    pub p_u: f64,
    /// Local combiner for levels 1 to 3; level 4 is always centralised MMSE.
    pub combiner: CombinerScheme,
    pub radio: Radio,
    pub pathloss: PathLossParams,
}

impl Default for UlSetup {
    fn default() -> Self {
        UlSetup {
            m: 10,
            k: 5,
            n: 2,
            area_side: 500.0,
            tau_c: 200,
            tau_up: 5,
            p_p: 0.1,
            p_u: 0.1,
            combiner: CombinerScheme::Mr,
            radio: Radio::default(),
            pathloss: PathLossParams::default(),
        }
    }
}

/// Secrecy sweep: every AP count in `m_values` is paired with
/// `total_antennas / m` antennas, and every radius in `radii` is tried.
/// Empty lists keep the values in `setup`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PlsSweep {
    pub setup: PlsSetup,
    pub m_values: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_antennas: Option<usize>,
    pub radii: Vec<f64>,
}

impl PlsSweep {
    /// `(case label, setup)` for every point of the sweep.
    pub fn cases(&self) -> Result<Vec<(String, PlsSetup)>> {
        let ms: Vec<usize> = if self.m_values.is_empty() { vec![self.setup.m] } else { self.m_values.clone() };
        let radii: Vec<f64> = if self.radii.is_empty() { vec![self.setup.radius] } else { self.radii.clone() };
        let mut out = Vec::new();
        for &m in &ms {
            let n = match self.total_antennas {
                Some(t) => {
                    if m == 0 || t % m != 0 {
                        return Err(Error::config("pls.m_values", format!("{m} does not divide total_antennas = {t}")));
                    }
                    t / m
                }
                None => self.setup.n,
            };
            for &r in &radii {
                let s = PlsSetup { m, n, radius: r, ..self.setup.clone() };
                out.push((format!("M{m}_N{n}_r{r}"), s));
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    /// Base preset; keys given in the file override it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub seeds: u64,
    pub master_seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    pub trials: usize,
    pub schemes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cdf: Option<String>,
    pub dl: DlSetup,
    pub ul: UlSetup,
    pub nafd: NafdSetup,
    pub noma: NomaSetup,
    pub pls: PlsSweep,
    pub eh: EhSetup,
    pub ris: RisSetup,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: None,
            preset: None,
            seeds: 1,
            master_seed: 0,
            workers: 1,
            trials: 1000,
            schemes: Vec::new(),
            out: None,
            cdf: None,
            dl: DlSetup::default(),
            ul: UlSetup::default(),
            nafd: NafdSetup::default(),
            noma: NomaSetup::default(),
            pls: PlsSweep::default(),
            eh: EhSetup::default(),
            ris: RisSetup::default(),
        }
    }
}

fn positive(field: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::config(field, "must be positive"));
    }
    Ok(())
}

fn positive_f(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::config(field, format!("must be positive, got {v}")));
    }
    Ok(())
}

fn nonneg_f(field: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::config(field, format!("must be nonnegative, got {v}")));
    }
    Ok(())
}

fn section<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(name, other.to_string()),
    })
}

impl ExperimentConfig {
    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario.ok_or_else(|| Error::config("scenario", "missing; set it in the file, a preset or on the command line"))
    }

    /// Schemes to run, in canonical order.
    pub fn selected_schemes(&self) -> Result<Vec<&'static str>> {
        let sc = self.scenario()?;
        if self.schemes.is_empty() {
            return Ok(sc.default_schemes());
        }
        let all = sc.schemes();
        for s in &self.schemes {
            if !all.iter().any(|a| a.eq_ignore_ascii_case(s)) {
                return Err(Error::config(
                    "schemes",
                    format!("`{s}` is not a {sc} scheme; expected one of {}", all.join(", ")),
                ));
            }
        }
        Ok(all.into_iter().filter(|a| self.schemes.iter().any(|s| a.eq_ignore_ascii_case(s))).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let sc = self.scenario()?;
        positive("seeds", self.seeds as usize)?;
        positive("trials", self.trials)?;
        self.selected_schemes()?;
        if let Some(c) = &self.cdf {
            if c.trim().is_empty() {
                return Err(Error::config("cdf", "metric name is empty"));
            }
        }
        match sc {
            Scenario::Dl => {
                let d = &self.dl;
                positive("dl.m", d.m)?;
                positive("dl.k", d.k)?;
                positive("dl.n", d.n)?;
                positive("dl.tau_up", d.tau_up)?;
                positive_f("dl.area_side", d.area_side)?;
                positive_f("dl.p_p", d.p_p)?;
                positive_f("dl.p_d", d.p_d)?;
                if d.tau_up >= d.tau_c {
                    return Err(Error::config("dl.tau_up", "must be below tau_c"));
                }
                if !(0.0..=1.0).contains(&d.strong_fraction) {
                    return Err(Error::config("dl.strong_fraction", "must lie in [0, 1]"));
                }
            }
            Scenario::Ul => {
                let u = &self.ul;
                positive("ul.m", u.m)?;
                positive("ul.k", u.k)?;
                positive("ul.n", u.n)?;
                positive("ul.tau_up", u.tau_up)?;
                positive_f("ul.area_side", u.area_side)?;
                positive_f("ul.p_p", u.p_p)?;
                nonneg_f("ul.p_u", u.p_u)?;
                if u.tau_up >= u.tau_c {
                    return Err(Error::config("ul.tau_up", "must be below tau_c"));
                }
                if !u.combiner.is_local() {
                    return Err(Error::config("ul.combiner", "levels 1 to 3 need a local combiner"));
                }
            }
            Scenario::Nafd => {
                positive("nafd.m", self.nafd.m)?;
                positive("nafd.n", self.nafd.n)?;
                section("nafd", self.nafd.validate())?;
            }
            Scenario::Noma => {
                positive("noma.m", self.noma.m)?;
                positive("noma.l", self.noma.l)?;
                positive("noma.n", self.noma.n)?;
                section("noma", self.noma.validate())?;
            }
            Scenario::Pls => {
                positive("pls.setup.m", self.pls.setup.m)?;
                positive("pls.setup.k", self.pls.setup.k)?;
                for (_, s) in self.pls.cases()? {
                    section("pls", s.validate())?;
                }
            }
            Scenario::Eh => {
                positive("eh.m", self.eh.m)?;
                positive("eh.n", self.eh.n)?;
                section("eh", self.eh.validate())?;
            }
            Scenario::Ris => {
                positive("ris.m", self.ris.m)?;
                positive("ris.k", self.ris.k)?;
                section("ris", self.ris.validate())?;
            }
            Scenario::Lemmas => {}
        }
        Ok(())
    }
}

/// Config syntax, chosen from the file extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn of(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

fn to_table(text: &str, format: Format, origin: &str) -> Result<toml::Table> {
    match format {
        Format::Toml => {
            // Typed pass first so bad keys and values are reported with a line.
            toml::from_str::<ExperimentConfig>(text).map_err(|e| Error::config(origin, e.to_string()))?;
            toml::from_str::<toml::Table>(text).map_err(|e| Error::config(origin, e.to_string()))
        }
        Format::Json => {
            serde_json::from_str::<ExperimentConfig>(text).map_err(|e| Error::config(origin, e.to_string()))?;
            let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::config(origin, e.to_string()))?;
            match toml::Value::try_from(v) {
                Ok(toml::Value::Table(t)) => Ok(t),
                Ok(_) => Err(Error::config(origin, "top level must be an object")),
                Err(e) => Err(Error::config(origin, e.to_string())),
            }
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Builds a validated config from optional file text, an optional preset and
/// an optional scenario. Later sources win: preset, then file, then overrides.
pub fn resolve_config(
    file: Option<(&str, Format, &str)>,
    preset: Option<&str>,
    scenario: Option<Scenario>,
) -> Result<ExperimentConfig> {
    let user = match file {
        Some((text, format, origin)) => to_table(text, format, origin)?,
        None => toml::Table::new(),
    };
    let preset_name = match preset {
        Some(p) => Some(p.to_string()),
        None => user.get("preset").and_then(|v| v.as_str()).map(str::to_string),
    };
    let mut table = match &preset_name {
        Some(p) => presets::preset_table(p)?,
        None => toml::Table::new(),
    };
    merge(&mut table, user);
    if let Some(p) = &preset_name {
        table.insert("preset".into(), toml::Value::String(p.clone()));
    }
    if let Some(sc) = scenario {
        match table.get("scenario").and_then(|v| v.as_str()) {
            Some(s) if s.parse::<Scenario>().ok() != Some(sc) => {
                return Err(Error::config("scenario", format!("config says `{s}` but `{sc}` was requested")));
            }
            _ => {
                table.insert("scenario".into(), toml::Value::String(sc.name().into()));
            }
        }
    }
    let text = toml::to_string(&table).map_err(|e| Error::config("config", e.to_string()))?;
    let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::config("merged config", e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let origin = path.display().to_string();
    resolve_config(Some((&text, Format::of(path), &origin)), None, None)
}

pub fn parse_config(text: &str, format: Format) -> Result<ExperimentConfig> {
    resolve_config(Some((text, format, "<config>")), None, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_dl_gets_defaults() {
        let c = parse_config("scenario = \"dl\"", Format::Toml).unwrap();
        assert_eq!(c.scenario, Some(Scenario::Dl));
        assert_eq!(c.dl, DlSetup::default());
        assert_eq!(c.selected_schemes().unwrap(), vec!["CB"]);
    }

    #[test]
    fn negative_count_names_field() {
        let e = parse_config("scenario = \"DL\"\n[dl]\nm = -3\n", Format::Toml).unwrap_err();
        let s = e.to_string();
        assert!(s.contains("m") && s.contains("line 3"), "{s}");
        let e = parse_config("scenario = \"DL\"\n[dl]\nm = 0\n", Format::Toml).unwrap_err();
        assert!(e.to_string().contains("dl.m"), "{e}");
    }

    #[test]
    fn unknown_key_rejected() {
        let e = parse_config("scenario = \"UL\"\nbogus = 1\n", Format::Toml).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = parse_config("{\"scenario\": \"UL\", \"ul\": {\"mm\": 3}}", Format::Json).unwrap_err();
        assert!(e.to_string().contains("mm") && e.to_string().contains("line 1"), "{e}");
    }

    #[test]
    fn scheme_must_match_scenario() {
        let e = parse_config("scenario = \"NAFD\"\nschemes = [\"CB\"]\n", Format::Toml).unwrap_err();
        assert!(e.to_string().contains("schemes"), "{e}");
        let c = parse_config("scenario = \"NAFD\"\nschemes = [\"hd\", \"nafd\"]\n", Format::Toml).unwrap();
        assert_eq!(c.selected_schemes().unwrap(), vec!["NAFD", "HD"]);
    }

    #[test]
    fn file_overrides_preset() {
        let c = parse_config("preset = \"fig4\"\n[nafd]\nm = 10\n", Format::Toml).unwrap();
        assert_eq!(c.scenario, Some(Scenario::Nafd));
        assert_eq!(c.nafd.m, 10);
        assert_eq!(c.nafd.k_d, 5);
        assert_eq!(c.nafd.si_db, 50.0);
    }

    #[test]
    fn pls_sweep_cases() {
        let p = PlsSweep { m_values: vec![12, 24], total_antennas: Some(240), radii: vec![20.0, 40.0], ..Default::default() };
        let c = p.cases().unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!((c[0].1.m, c[0].1.n, c[0].1.radius), (12, 20, 20.0));
        assert_eq!(c[3].0, "M24_N10_r40");
        let bad = PlsSweep { m_values: vec![7], total_antennas: Some(240), ..Default::default() };
        assert!(bad.cases().is_err());
    }
}
