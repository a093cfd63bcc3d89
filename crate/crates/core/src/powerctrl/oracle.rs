use super::PowerProblem;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct GridResult {
    pub mu: Vec<f64>,
    pub value: f64,
}

/// Brute-force search for two groups of two variables. Each group is
/// parametrised by its load fraction `p` and split `x`; one group always runs
/// at full load since scaling every power up never hurts any SINR. A coarse
/// pass is refined to `resolution` around the best coarse points.
pub fn grid_objective_2x2(p: &PowerProblem, resolution: f64, objective: impl Fn(&[f64]) -> f64) -> Result<GridResult> {
    p.validate()?;
    let free = p.free_vars();
    let mut layout = Vec::new();
    for g in &p.groups {
        let members: Vec<(usize, f64)> = g.members.iter().filter(|(v, _)| free[*v].is_some()).cloned().collect();
        if members.len() != 2 {
            return Err(Error::invalid("grid oracle needs exactly two active variables per group"));
        }
        layout.push((members, g.budget));
    }
    if layout.len() != 2 {
        return Err(Error::invalid("grid oracle needs exactly two groups"));
    }
    let point = |full: usize, other_p: f64, x0: f64, x1: f64| -> Vec<f64> {
        let mut mu = vec![0.0; p.n_vars];
        for (g, (members, budget)) in layout.iter().enumerate() {
            let load = if g == full { 1.0 } else { other_p };
            let x = if g == 0 { x0 } else { x1 };
            mu[members[0].0] = (budget * load * x / members[0].1).sqrt();
            mu[members[1].0] = (budget * load * (1.0 - x) / members[1].1).sqrt();
        }
        mu
    };
    let coarse: f64 = 0.02;
    let steps = (1.0 / coarse).round() as usize;
    let mut top: Vec<(f64, usize, f64, f64, f64)> = Vec::new();
    for full in 0..2 {
        for ip in 0..=steps {
            for i0 in 0..=steps {
                for i1 in 0..=steps {
                    let (pp, x0, x1) = (ip as f64 * coarse, i0 as f64 * coarse, i1 as f64 * coarse);
                    let v = objective(&point(full, pp, x0, x1));
                    if v.is_finite() {
                        top.push((v, full, pp, x0, x1));
                    }
                }
            }
        }
        top.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        top.truncate(8);
    }
    let mut best = top[0];
    let fine = (2.0 * coarse / resolution).round() as i64;
    for &(_, full, pp, x0, x1) in &top.clone() {
        for dp in -fine..=fine {
            let pq = pp + dp as f64 * resolution;
            if !(0.0..=1.0).contains(&pq) {
                continue;
            }
            for d0 in -fine..=fine {
                let y0 = x0 + d0 as f64 * resolution;
                if !(0.0..=1.0).contains(&y0) {
                    continue;
                }
                for d1 in -fine..=fine {
                    let y1 = x1 + d1 as f64 * resolution;
                    if !(0.0..=1.0).contains(&y1) {
                        continue;
                    }
                    let v = objective(&point(full, pq, y0, y1));
                    if v > best.0 {
                        best = (v, full, pq, y0, y1);
                    }
                }
            }
        }
    }
    let mu = point(best.1, best.2, best.3, best.4);
    Ok(GridResult { value: best.0, mu })
}

pub fn grid_maxmin_2x2(p: &PowerProblem, resolution: f64) -> Result<GridResult> {
    grid_objective_2x2(p, resolution, |mu| p.min_sinr(mu))
}
