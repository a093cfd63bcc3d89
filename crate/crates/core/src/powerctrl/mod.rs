//! Power control over closed-form SINR expressions.
//!
//! Every supported SINR has the shape
//! `(sᵀμ)² / (Σ_j (c_jᵀμ)² + Σ_g a_g P_g(μ) + σ)` in the square-root power
//! variables `μ`, where `P_g = Σ_{v∈g} w_v μ_v²` is the load of power group
//! `g` (one per AP) and `P_g ≤ ζ_g` is its budget.

mod ee;
mod maxmin;
mod oracle;
mod pgd;
pub mod socp;

pub use ee::{total_ee, PowerModel};
pub use maxmin::{solve_maxmin_bisection, MaxMinOptions, MaxMinSolution};
pub use oracle::{grid_maxmin_2x2, grid_objective_2x2, GridResult};
pub use pgd::{solve_propfair_pgd, solve_sumse_pgd, PgdOptions, PgdSolution};

use nalgebra::DMatrix;

use crate::training::PilotBook;
use crate::{Error, Result};

/// One SINR expression with sparse coefficient vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SinrLink {
    pub signal: Vec<(usize, f64)>,
    pub coherent: Vec<Vec<(usize, f64)>>,
    /// `(group, a_g)` pairs multiplying group loads.
    pub load_gain: Vec<(usize, f64)>,
    pub noise: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerGroup {
    /// `(variable, w_v)`.
    pub members: Vec<(usize, f64)>,
    pub budget: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerProblem {
    pub n_vars: usize,
    pub links: Vec<SinrLink>,
    /// Links of each user; a user's SINR is the minimum over its links.
    pub users: Vec<Vec<usize>>,
    pub groups: Vec<PowerGroup>,
    /// Optional per-user SINR floors.
    pub floors: Option<Vec<f64>>,
}

fn dot(v: &[(usize, f64)], mu: &[f64]) -> f64 {
    v.iter().map(|&(i, a)| a * mu[i]).sum()
}

impl PowerProblem {
    pub fn validate(&self) -> Result<()> {
        let mut owner = vec![None; self.n_vars];
        for (g, grp) in self.groups.iter().enumerate() {
            if !(grp.budget >= 0.0) {
                return Err(Error::invalid(format!("group {g} has a negative budget")));
            }
            for &(v, w) in &grp.members {
                if v >= self.n_vars || w < 0.0 || !w.is_finite() {
                    return Err(Error::invalid(format!("group {g} has a bad member {v}")));
                }
                if owner[v].replace(g).is_some() {
                    return Err(Error::invalid(format!("variable {v} belongs to two groups")));
                }
            }
        }
        for (l, link) in self.links.iter().enumerate() {
            if !(link.noise > 0.0) {
                return Err(Error::NumericalDomain(format!("link {l} needs positive noise")));
            }
            if link.load_gain.iter().any(|&(g, a)| g >= self.groups.len() || a < 0.0) {
                return Err(Error::invalid(format!("link {l} has a bad load gain")));
            }
        }
        if self.users.iter().flatten().any(|&l| l >= self.links.len()) || self.users.iter().any(Vec::is_empty) {
            return Err(Error::invalid("every user needs at least one valid link"));
        }
        if let Some(f) = &self.floors {
            if f.len() != self.users.len() {
                return Err(Error::invalid("one SINR floor per user"));
            }
        }
        Ok(())
    }

    pub fn group_loads(&self, mu: &[f64]) -> Vec<f64> {
        self.groups.iter().map(|g| g.members.iter().map(|&(v, w)| w * mu[v] * mu[v]).sum()).collect()
    }

    pub fn link_sinr(&self, mu: &[f64]) -> Vec<f64> {
        let loads = self.group_loads(mu);
        self.links
            .iter()
            .map(|l| {
                let num = dot(&l.signal, mu).powi(2);
                let den: f64 = l.coherent.iter().map(|c| dot(c, mu).powi(2)).sum::<f64>()
                    + l.load_gain.iter().map(|&(g, a)| a * loads[g]).sum::<f64>()
                    + l.noise;
                num / den
            })
            .collect()
    }

    pub fn user_sinr(&self, mu: &[f64]) -> Vec<f64> {
        let ls = self.link_sinr(mu);
        self.users.iter().map(|u| u.iter().map(|&l| ls[l]).fold(f64::INFINITY, f64::min)).collect()
    }

    pub fn min_sinr(&self, mu: &[f64]) -> f64 {
        self.user_sinr(mu).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Largest budget or sign violation.
    pub fn violation(&self, mu: &[f64]) -> f64 {
        let mut v = mu.iter().fold(0.0f64, |m, x| m.max(-x));
        for (g, load) in self.groups.iter().zip(self.group_loads(mu)) {
            v = v.max(load - g.budget);
        }
        v
    }

    /// Variables owned by a group with positive weight.
    pub fn free_vars(&self) -> Vec<Option<(usize, f64)>> {
        let mut out = vec![None; self.n_vars];
        for (g, grp) in self.groups.iter().enumerate() {
            for &(v, w) in &grp.members {
                if w > 0.0 && grp.budget > 0.0 {
                    out[v] = Some((g, w));
                }
            }
        }
        out
    }

    /// Each group spends its whole budget, split evenly across its members.
    pub fn uniform_full_power(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.n_vars];
        for g in &self.groups {
            let active: Vec<_> = g.members.iter().filter(|(_, w)| *w > 0.0).collect();
            for &&(v, w) in &active {
                mu[v] = (g.budget / (active.len() as f64 * w)).sqrt();
            }
        }
        mu
    }

    /// Clamps negatives, zeroes unowned variables and shrinks overloaded groups.
    pub fn repair(&self, mu: &mut [f64]) {
        let free = self.free_vars();
        for (v, x) in mu.iter_mut().enumerate() {
            if free[v].is_none() || !x.is_finite() || *x < 0.0 {
                *x = 0.0;
            }
        }
        for g in &self.groups {
            let load: f64 = g.members.iter().map(|&(v, w)| w * mu[v] * mu[v]).sum();
            if load > g.budget {
                let s = (g.budget / load).sqrt() * (1.0 - 1e-15);
                for &(v, _) in &g.members {
                    mu[v] *= s;
                }
            }
        }
    }

    /// Downlink CB problem: variable `m*K + k` is `√η_{mk}`, AP budgets
    /// `N Σ_k γ_{mk} η_{mk} ≤ 1`. With `pilots`, copilot contamination enters
    /// as coherent interference.
    pub fn cb_downlink(
        beta: &DMatrix<f64>,
        gamma: &DMatrix<f64>,
        rho_d: f64,
        n: usize,
        contamination: Option<(&PilotBook, f64)>,
    ) -> Result<Self> {
        let (m, k) = beta.shape();
        if gamma.shape() != (m, k) {
            return Err(Error::invalid("beta and gamma shapes differ"));
        }
        if !(rho_d > 0.0) {
            return Err(Error::invalid("rho_d must be positive"));
        }
        let nf = n as f64;
        let var = |mm: usize, kk: usize| mm * k + kk;
        let groups = (0..m)
            .map(|mm| PowerGroup { members: (0..k).map(|kk| (var(mm, kk), nf * gamma[(mm, kk)])).collect(), budget: 1.0 })
            .collect();
        let mut links = Vec::with_capacity(k);
        for kk in 0..k {
            let signal = (0..m).map(|mm| (var(mm, kk), rho_d.sqrt() * nf * gamma[(mm, kk)])).collect();
            let load_gain = (0..m).map(|mm| (mm, rho_d * beta[(mm, kk)])).collect();
            let mut coherent = Vec::new();
            if let Some((pilots, rho_p)) = contamination {
                let tau = pilots.tau_up as f64;
                for kp in pilots.copilots(kk).into_iter().filter(|&t| t != kk) {
                    let c = (0..m)
                        .map(|mm| {
                            let phi: f64 = pilots
                                .copilots(kk)
                                .iter()
                                .map(|&t| tau * rho_p * pilots.pilot_power[t] * beta[(mm, t)])
                                .sum::<f64>()
                                + 1.0;
                            let x = tau * rho_p * (pilots.pilot_power[kk] * pilots.pilot_power[kp]).sqrt()
                                * beta[(mm, kk)]
                                * beta[(mm, kp)]
                                / phi;
                            (var(mm, kp), rho_d.sqrt() * nf * x)
                        })
                        .collect();
                    coherent.push(c);
                }
            }
            links.push(SinrLink { signal, coherent, load_gain, noise: 1.0 });
        }
        let p = PowerProblem { n_vars: m * k, links, users: (0..k).map(|u| vec![u]).collect(), groups, floors: None };
        p.validate()?;
        Ok(p)
    }

    /// Reshapes a variable vector laid out `m*K + k` into `η` (M×K).
    pub fn eta_matrix(mu: &[f64], m: usize, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(m, k, |mm, kk| mu[mm * k + kk].powi(2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dlink::dl_sinr_closed_cb;

    #[test]
    fn cb_problem_matches_closed_form() {
        let beta = DMatrix::from_row_slice(2, 3, &[1.0, 0.3, 0.2, 0.4, 0.9, 1.1]);
        let pilots = PilotBook::round_robin(3, 3, 1.0).unwrap();
        let gamma = crate::training::gamma_uncorrelated(&beta, &pilots, 1.0);
        let p = PowerProblem::cb_downlink(&beta, &gamma, 5.0, 4, None).unwrap();
        let mu = p.uniform_full_power();
        let eta = PowerProblem::eta_matrix(&mu, 2, 3);
        let a = p.link_sinr(&mu);
        let b = dl_sinr_closed_cb(&beta, &gamma, &eta, 5.0, 4);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12 * y);
        }
        assert!(p.violation(&mu) < 1e-12);
    }
}
