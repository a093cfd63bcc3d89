//! Result rows, CSV output and empirical CDFs.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{Error, Result};

/// One metric of one scheme on one seed. `values` is usually per UE.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub seed: u64,
    pub scheme: String,
    /// Sweep point, empty when the scenario has none.
    pub case: String,
    pub metric: String,
    pub values: Vec<f64>,
}

impl ResultRow {
    pub fn new(seed: u64, scheme: &str, case: &str, metric: &str, values: Vec<f64>) -> Self {
        ResultRow { seed, scheme: scheme.into(), case: case.into(), metric: metric.into(), values }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

/// How rows are reduced to CDF samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pool {
    Values,
    Sum,
    Min,
    Mean,
}

/// Splits `se:sum` into the metric and its pooling rule.
pub fn parse_metric(spec: &str) -> Result<(String, Pool)> {
    let (name, pool) = match spec.split_once(':') {
        None => (spec, Pool::Values),
        Some((n, "sum")) => (n, Pool::Sum),
        Some((n, "min")) => (n, Pool::Min),
        Some((n, "mean")) => (n, Pool::Mean),
        Some((_, p)) => return Err(Error::config("cdf", format!("unknown reduction `{p}`, use sum, min or mean"))),
    };
    if name.trim().is_empty() {
        return Err(Error::config("cdf", "metric name is empty"));
    }
    Ok((name.trim().to_string(), pool))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdfSeries {
    pub scheme: String,
    pub case: String,
    /// `(value, F(value))`, ascending in both.
    pub points: Vec<(f64, f64)>,
}

/// Empirical CDF: the i-th smallest sample gets `(i+1)/n`. NaNs are dropped.
pub fn empirical_cdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut s: Vec<f64> = samples.iter().cloned().filter(|x| !x.is_nan()).collect();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / n)).collect()
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

impl ResultTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn schemes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.scheme) {
                out.push(r.scheme.clone());
            }
        }
        out
    }

    /// Rows of one metric and scheme, any case.
    pub fn select<'a>(&'a self, scheme: &'a str, metric: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.scheme == scheme && r.metric == metric)
    }

    /// Long-format CSV: one line per row, per-UE values joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("seed,scheme,case,metric,count,sum,min,mean,values\n");
        for r in &self.rows {
            let vals: Vec<String> = r.values.iter().map(|v| fmt_f(*v)).collect();
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.seed,
                r.scheme,
                r.case,
                r.metric,
                r.values.len(),
                fmt_f(r.sum()),
                fmt_f(r.min()),
                fmt_f(r.mean()),
                vals.join(";")
            ));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv())
    }

    /// One CDF per (scheme, case) for a metric spec such as `se` or `se:sum`.
    pub fn cdf(&self, spec: &str) -> Result<Vec<CdfSeries>> {
        let (metric, pool) = parse_metric(spec)?;
        let mut groups: Vec<(String, String, Vec<f64>)> = Vec::new();
        for r in self.rows.iter().filter(|r| r.metric == metric) {
            let idx = match groups.iter().position(|g| g.0 == r.scheme && g.1 == r.case) {
                Some(i) => i,
                None => {
                    groups.push((r.scheme.clone(), r.case.clone(), Vec::new()));
                    groups.len() - 1
                }
            };
            let g = &mut groups[idx].2;
            match pool {
                Pool::Values => g.extend(&r.values),
                Pool::Sum => g.push(r.sum()),
                Pool::Min => g.push(r.min()),
                Pool::Mean => g.push(r.mean()),
            }
        }
        let out: Vec<CdfSeries> = groups
            .into_iter()
            .filter(|g| !g.2.is_empty())
            .map(|(scheme, case, v)| CdfSeries { scheme, case, points: empirical_cdf(&v) })
            .collect();
        if out.is_empty() {
            return Err(Error::config("cdf", format!("metric `{metric}` has no samples")));
        }
        Ok(out)
    }

    /// Median of the pooled samples per (scheme, case), in first-seen order.
    pub fn medians(&self, spec: &str) -> Result<Vec<(String, String, f64)>> {
        Ok(self
            .cdf(spec)?
            .into_iter()
            .map(|s| {
                let v: Vec<f64> = s.points.iter().map(|p| p.0).collect();
                (s.scheme, s.case, crate::casestudies::median(&v))
            })
            .collect())
    }
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

pub fn cdf_text(points: &[(f64, f64)]) -> String {
    let mut s = String::from("value,cdf\n");
    for (x, f) in points {
        s.push_str(&format!("{},{}\n", fmt_f(*x), fmt_f(*f)));
    }
    s
}

/// Writes one two-column CDF file per scheme next to `base`, named
/// `<stem>.<metric>.<scheme>[.<case>].cdf.csv`. Returns the paths written.
pub fn emit_cdf(table: &ResultTable, spec: &str, base: &Path) -> Result<Vec<PathBuf>> {
    let series = table.cdf(spec)?;
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    let dir = base.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for s in series {
        let mut name = format!("{stem}.{}.{}", slug(spec), slug(&s.scheme));
        if !s.case.is_empty() {
            name.push('.');
            name.push_str(&slug(&s.case));
        }
        name.push_str(".cdf.csv");
        let p = dir.join(name);
        write_atomic(&p, &cdf_text(&s.points))?;
        out.push(p);
    }
    Ok(out)
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let tmp = path.with_extension("partial");
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_examples() {
        assert_eq!(empirical_cdf(&[4.0]), vec![(4.0, 1.0)]);
        let c = empirical_cdf(&[3.0, 1.0, 2.0]);
        assert_eq!(c.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
        assert_eq!(c.iter().map(|p| p.1).collect::<Vec<_>>(), vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
    }

    #[test]
    fn csv_shape() {
        let t = ResultTable { rows: vec![ResultRow::new(0, "CB", "", "se", vec![1.0, 0.5])] };
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "seed,scheme,case,metric,count,sum,min,mean,values");
        assert_eq!(lines[1], "0,CB,,se,2,1.5,0.5,0.75,1;0.5");
    }

    #[test]
    fn pooled_cdf_and_missing_metric() {
        let t = ResultTable {
            rows: vec![
                ResultRow::new(0, "A", "", "se", vec![1.0, 2.0]),
                ResultRow::new(1, "A", "", "se", vec![3.0, 4.0]),
                ResultRow::new(0, "B", "", "se", vec![0.0, 0.0]),
            ],
        };
        let s = t.cdf("se:sum").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].points, vec![(3.0, 0.5), (7.0, 1.0)]);
        assert_eq!(t.cdf("se").unwrap()[0].points.len(), 4);
        assert!(t.cdf("rate").is_err());
        assert!(t.cdf("se:median").is_err());
        assert!(t.cdf(":sum").is_err());
        let m = t.medians("se:sum").unwrap();
        assert_eq!(m[0], ("A".to_string(), String::new(), 5.0));
        assert_eq!(m[1].2, 0.0);
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("out.csv");
        let t = ResultTable { rows: vec![ResultRow::new(0, "RIS-CF-mMIMO", "", "ul_se", vec![2.0, 1.0])] };
        t.write_csv(&base).unwrap();
        let files = emit_cdf(&t, "ul_se", &base).unwrap();
        assert_eq!(files.len(), 1);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text, "value,cdf\n1,0.5\n2,1\n");
        assert!(std::fs::read_to_string(&base).unwrap().starts_with("seed,"));
    }
}
