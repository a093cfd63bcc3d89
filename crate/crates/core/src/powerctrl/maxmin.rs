use std::cell::RefCell;

use super::socp::{self, AdmmSettings, AdmmState, Cone, ConeProgram, ConeStatus};
use super::PowerProblem;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct MaxMinOptions {
    /// Relative width of the final bracket.
    pub tol: f64,
    pub max_bisection: usize,
    pub admm: AdmmSettings,
}

impl Default for MaxMinOptions {
    fn default() -> Self {
        MaxMinOptions {
            tol: 1e-4,
            max_bisection: 80,
            admm: AdmmSettings { objective_weight: 0.0, sigma: 1e-3, ..AdmmSettings::default() },
        }
    }
}

#[derive(Clone, Debug)]
pub struct MaxMinSolution {
    pub mu: Vec<f64>,
    pub user_sinr: Vec<f64>,
    pub min_sinr: f64,
    /// Upper end of the final bracket.
    pub upper_bound: f64,
    /// `(target, feasible)` for every feasibility test.
    pub trace: Vec<(f64, bool)>,
    pub admm_iterations: usize,
}

struct Layout {
    /// Free variable → (original index, scale to μ).
    free: Vec<(usize, f64)>,
    x_of: Vec<Option<usize>>,
    /// Group → q index in x.
    q_of: Vec<Option<usize>>,
    n: usize,
}

impl Layout {
    fn new(p: &PowerProblem) -> Self {
        let owners = p.free_vars();
        let mut free = Vec::new();
        let mut x_of = vec![None; p.n_vars];
        for (v, o) in owners.iter().enumerate() {
            if let Some((g, w)) = o {
                x_of[v] = Some(free.len());
                free.push((v, (p.groups[*g].budget / w).sqrt()));
            }
        }
        let mut q_of = vec![None; p.groups.len()];
        let mut n = free.len();
        for (g, grp) in p.groups.iter().enumerate() {
            if grp.members.iter().any(|&(v, _)| x_of[v].is_some()) {
                q_of[g] = Some(n);
                n += 1;
            }
        }
        Layout { free, x_of, q_of, n }
    }

    fn to_mu(&self, p: &PowerProblem, x: &[f64]) -> Vec<f64> {
        let mut mu = vec![0.0; p.n_vars];
        for (i, &(v, s)) in self.free.iter().enumerate() {
            mu[v] = s * x[i];
        }
        p.repair(&mut mu);
        let c = p
            .group_loads(&mu)
            .iter()
            .zip(&p.groups)
            .filter(|(l, _)| **l > 0.0)
            .map(|(l, g)| (g.budget / l).sqrt())
            .fold(f64::INFINITY, f64::min);
        if c.is_finite() && c > 1.0 {
            mu.iter_mut().for_each(|x| *x *= c);
            p.repair(&mut mu);
        }
        mu
    }

    fn scaled(&self, coeffs: &[(usize, f64)], factor: f64) -> Vec<(usize, f64)> {
        coeffs
            .iter()
            .filter_map(|&(v, a)| self.x_of[v].map(|i| (i, -a * self.free[i].1 * factor)))
            .filter(|&(_, a)| a != 0.0)
            .collect()
    }
}

fn build_program(p: &PowerProblem, lay: &Layout, targets: &[f64]) -> ConeProgram {
    let mut prog = ConeProgram::new(lay.n);
    for (u, links) in p.users.iter().enumerate() {
        let t = targets[u];
        if t <= 0.0 {
            continue;
        }
        for &l in links {
            let link = &p.links[l];
            let mut rows = vec![(lay.scaled(&link.signal, 1.0 / t.sqrt()), 0.0)];
            for c in &link.coherent {
                rows.push((lay.scaled(c, 1.0), 0.0));
            }
            for &(g, a) in &link.load_gain {
                if let Some(q) = lay.q_of[g] {
                    rows.push((vec![(q, -(a * p.groups[g].budget).sqrt())], 0.0));
                }
            }
            rows.push((Vec::new(), link.noise.sqrt()));
            let f = rows
                .iter()
                .map(|(r, b)| r.iter().map(|(_, a)| a * a).sum::<f64>().sqrt().max(b.abs()))
                .fold(0.0, f64::max);
            for (r, b) in rows.iter_mut() {
                r.iter_mut().for_each(|(_, a)| *a /= f);
                *b /= f;
            }
            prog.push_cone(Cone::Soc(rows.len()), rows);
        }
    }
    for (g, grp) in p.groups.iter().enumerate() {
        let Some(q) = lay.q_of[g] else { continue };
        let mut rows = vec![(vec![(q, -1.0)], 0.0)];
        for &(v, _) in &grp.members {
            if let Some(i) = lay.x_of[v] {
                rows.push((vec![(i, -1.0)], 0.0));
            }
        }
        prog.push_cone(Cone::Soc(rows.len()), rows);
    }
    let mut nonneg: Vec<(Vec<(usize, f64)>, f64)> =
        lay.q_of.iter().flatten().map(|&q| (vec![(q, 1.0)], 1.0)).collect();
    nonneg.extend((0..lay.free.len()).map(|i| (vec![(i, -1.0)], 0.0)));
    prog.push_cone(Cone::NonNeg(nonneg.len()), nonneg);
    prog
}

fn meets(p: &PowerProblem, mu: &[f64], targets: &[f64], slack: f64) -> bool {
    p.user_sinr(mu).iter().zip(targets).all(|(s, t)| *s >= t * (1.0 - slack))
}

/// Interference-free SINR bound per user at full budget.
fn interference_free_bound(p: &PowerProblem, lay: &Layout) -> f64 {
    let owners = p.free_vars();
    p.users
        .iter()
        .map(|links| {
            links
                .iter()
                .map(|&l| {
                    let link = &p.links[l];
                    let mut per_group = vec![0.0; p.groups.len()];
                    for &(v, a) in &link.signal {
                        if let (Some(i), Some((g, _))) = (lay.x_of[v], owners[v]) {
                            per_group[g] += (a.max(0.0) * lay.free[i].1).powi(2);
                        }
                    }
                    per_group.iter().map(|x| x.sqrt()).sum::<f64>().powi(2) / link.noise
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Scales down users above the common level. Shrinking user `k` by
/// `√(t/SINR_k)` keeps it at or above `t` and only lowers interference.
fn balance(p: &PowerProblem, mu: &mut [f64], floors: &[f64]) {
    let owners: Vec<Vec<usize>> = p
        .users
        .iter()
        .map(|links| {
            let mut v: Vec<usize> = links.iter().flat_map(|&l| p.links[l].signal.iter().map(|&(i, _)| i)).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    // Variables shared between users cannot be scaled per user.
    let mut count = vec![0usize; p.n_vars];
    owners.iter().flatten().for_each(|&v| count[v] += 1);
    for _ in 0..200 {
        let s = p.user_sinr(mu);
        let t = s.iter().cloned().fold(f64::INFINITY, f64::min);
        if s.iter().all(|x| *x <= t * (1.0 + 1e-7)) {
            break;
        }
        let before = mu.to_vec();
        for (k, vars) in owners.iter().enumerate() {
            let target = t.max(floors[k]);
            if s[k] > target * (1.0 + 1e-7) && vars.iter().all(|&v| count[v] == 1) {
                let f = (target / s[k]).sqrt();
                vars.iter().for_each(|&v| mu[v] *= f);
            }
        }
        if p.min_sinr(mu) < t {
            mu.copy_from_slice(&before);
            break;
        }
    }
}

/// Maximises the minimum user SINR by bisection over the target, testing
/// each target with a second-order-cone feasibility solve.
pub fn solve_maxmin_bisection(p: &PowerProblem, opts: &MaxMinOptions) -> Result<MaxMinSolution> {
    p.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("bisection tolerance must be positive"));
    }
    let lay = Layout::new(p);
    let floors = p.floors.clone().unwrap_or_else(|| vec![0.0; p.users.len()]);
    let targets_at = |t: f64| -> Vec<f64> { floors.iter().map(|f| f.max(t)).collect() };
    let uniform = p.uniform_full_power();
    let mut trace = Vec::new();
    let mut admm_iterations = 0;
    let mut warm: Option<AdmmState> = None;
    // A candidate this close to the target counts as reaching it.
    let slack = 0.1 * opts.tol;

    let feasibility = |t: f64, warm: &mut Option<AdmmState>, iters: &mut usize| -> Option<Vec<f64>> {
        let targets = targets_at(t);
        let prog = build_program(p, &lay, &targets);
        let found = RefCell::new(None);
        let res = socp::solve(&prog, &opts.admm, warm.as_ref(), |x| {
            let mu = lay.to_mu(p, x);
            if meets(p, &mu, &targets, slack) {
                *found.borrow_mut() = Some(mu);
                true
            } else {
                false
            }
        });
        *iters += res.iterations;
        let mut found = found.into_inner();
        if found.is_none() && res.status == ConeStatus::Solved {
            let mu = lay.to_mu(p, &res.x);
            if meets(p, &mu, &targets, 1e-6) {
                found = Some(mu);
            }
        }
        if found.is_some() {
            *warm = Some(res.state);
        }
        found
    };

    if p.min_sinr(&uniform) <= 0.0 {
        return Err(Error::Infeasible("some user has no usable signal path".into()));
    }
    let mut best = if meets(p, &uniform, &targets_at(0.0), 0.0) {
        uniform
    } else {
        let f = feasibility(0.0, &mut warm, &mut admm_iterations);
        trace.push((0.0, f.is_some()));
        f.ok_or_else(|| Error::Infeasible("SINR floors cannot be met".into()))?
    };
    let mut lo = p.min_sinr(&best);
    let mut hi = interference_free_bound(p, &lay).max(lo);
    let mut steps = 0;
    while hi - lo > opts.tol * hi && steps < opts.max_bisection {
        steps += 1;
        let t = 0.5 * (lo + hi);
        match feasibility(t, &mut warm, &mut admm_iterations) {
            Some(mu) => {
                trace.push((t, true));
                let achieved = p.min_sinr(&mu);
                if achieved > p.min_sinr(&best) {
                    best = mu;
                }
                lo = lo.max(t.max(achieved).min(hi));
            }
            None => {
                trace.push((t, false));
                hi = t;
            }
        }
    }
    balance(p, &mut best, &floors);
    let user_sinr = p.user_sinr(&best);
    Ok(MaxMinSolution {
        min_sinr: user_sinr.iter().cloned().fold(f64::INFINITY, f64::min),
        user_sinr,
        mu: best,
        upper_bound: hi,
        trace,
        admm_iterations,
    })
}
