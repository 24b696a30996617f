//! Minimal ℓ¹ and bid-ask-aware ℓ¹ repair of call prices.
//!
//! Both problems are solved through their LP duals, which have one row per
//! price instead of one row per constraint:
//!
//! ```text
//! minimize   sum_r res_r y_r + sum_j (da_j p_j + db_j q_j)
//! subject to -d0/db_j <= (A^T y)_j - p_j + q_j <= d0/da_j
//!            y >= 0, 0 <= p_j <= 1 - d0/da_j, 0 <= q_j <= 1 - d0/db_j
//! ```
//!
//! where `res = A c - b`. The perturbation is minus the row multipliers. The
//! plain ℓ¹ problem is the case `da = db = d0`, which drops `p` and `q`.
//! [`primal_l1_lp`] and [`primal_l1ba_lp`] build the direct formulations for
//! cross-checking.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{ConstraintKind, ConstraintSystem};
use crate::lp::{LinearProgram, LpError, LpSolver, LpStatus, SimplexSolver};
use crate::normalize::{NodeId, NormalizedSurface};

pub const DEFAULT_FEAS_TOL: f64 = 1e-9;
/// Perturbations at or below this magnitude are not counted.
pub const DEFAULT_ZERO_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepairError {
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("delta0 override {value} must be positive and at most the smallest half-spread {max}")]
    InvalidDelta0 { value: f64, max: f64 },
    #[error("half-spread {value} at price {index} is not positive")]
    NonPositiveSpread { index: usize, value: f64 },
    #[error("solver failed: {0}")]
    Solver(#[from] LpError),
    #[error("solver stopped with status {status:?} after {iterations} iterations")]
    SolverStatus { status: LpStatus, iterations: usize },
    #[error("repaired prices violate a constraint by {residual}")]
    ResidualViolation { residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    #[default]
    L1,
    L1ba,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RepairConfig {
    pub objective: Objective,
    pub delta0_override: Option<f64>,
    pub feas_tol: f64,
    pub zero_tol: f64,
}

impl Default for RepairConfig {
    fn default() -> Self {
        Self {
            objective: Objective::L1,
            delta0_override: None,
            feas_tol: DEFAULT_FEAS_TOL,
            zero_tol: DEFAULT_ZERO_TOL,
        }
    }
}

impl RepairConfig {
    pub fn l1() -> Self {
        Self::default()
    }

    pub fn l1ba() -> Self {
        Self {
            objective: Objective::L1ba,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RepairResult {
    pub objective: Objective,
    pub epsilon: Vec<f64>,
    pub repaired: Vec<f64>,
    pub objective_value: f64,
    pub n_perturbed: usize,
    pub n_effective: usize,
    /// `None` for the plain ℓ¹ objective.
    pub delta0_used: Option<f64>,
    /// Smallest row residual of the repaired prices.
    pub min_residual: Option<f64>,
    pub iterations: usize,
}

/// `min(1/N, min_j min(da_j, db_j))`.
pub fn compute_delta0(surface: &NormalizedSurface) -> f64 {
    let n = surface.n_vars().max(1) as f64;
    surface
        .ask_spreads()
        .into_iter()
        .chain(surface.bid_spreads())
        .fold(1.0 / n, f64::min)
}

/// Bid-ask-aware cost of moving a price by `x`.
pub fn ba_cost(x: f64, da: f64, db: f64, d0: f64) -> f64 {
    (-x - db + d0)
        .max(-d0 / db * x)
        .max(d0 / da * x)
        .max(x - da + d0)
}

/// Whether each perturbation moves its price strictly outside the band.
pub fn effective_mask(
    epsilon: &[f64],
    surface: &NormalizedSurface,
    zero_tol: f64,
) -> Result<Vec<bool>, RepairError> {
    check_len(surface.n_vars(), epsilon.len())?;
    let (ask, bid) = (surface.ask_spreads(), surface.bid_spreads());
    Ok(epsilon
        .iter()
        .enumerate()
        .map(|(j, &e)| e > ask[j] + zero_tol || e < -bid[j] - zero_tol)
        .collect())
}

/// `(N^eps, N^{eps,delta})`: perturbed prices and prices moved strictly
/// outside their band.
pub fn count_perturbations(
    epsilon: &[f64],
    surface: &NormalizedSurface,
    zero_tol: f64,
) -> Result<(usize, usize), RepairError> {
    let effective = effective_mask(epsilon, surface, zero_tol)?;
    let perturbed = epsilon.iter().filter(|e| e.abs() > zero_tol).count();
    Ok((perturbed, effective.into_iter().filter(|&b| b).count()))
}

fn check_len(expected: usize, got: usize) -> Result<(), RepairError> {
    if expected != got {
        return Err(RepairError::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn check_spreads(surface: &NormalizedSurface) -> Result<(Vec<f64>, Vec<f64>), RepairError> {
    let (ask, bid) = (surface.ask_spreads(), surface.bid_spreads());
    for (index, &value) in ask.iter().chain(&bid).enumerate() {
        if value.is_nan() || value <= 0.0 {
            return Err(RepairError::NonPositiveSpread {
                index: index % ask.len().max(1),
                value,
            });
        }
    }
    Ok((ask, bid))
}

pub fn repair_l1(
    surface: &NormalizedSurface,
    system: &ConstraintSystem,
    config: &RepairConfig,
) -> Result<RepairResult, RepairError> {
    repair(
        surface,
        system,
        &RepairConfig {
            objective: Objective::L1,
            ..*config
        },
    )
}

pub fn repair_l1ba(
    surface: &NormalizedSurface,
    system: &ConstraintSystem,
    config: &RepairConfig,
) -> Result<RepairResult, RepairError> {
    repair(
        surface,
        system,
        &RepairConfig {
            objective: Objective::L1ba,
            ..*config
        },
    )
}

/// Repairs with the objective chosen in `config` using the bundled solver.
pub fn repair(
    surface: &NormalizedSurface,
    system: &ConstraintSystem,
    config: &RepairConfig,
) -> Result<RepairResult, RepairError> {
    repair_with(&SimplexSolver::default(), surface, system, config)
}

pub fn repair_with(
    solver: &dyn LpSolver,
    surface: &NormalizedSurface,
    system: &ConstraintSystem,
    config: &RepairConfig,
) -> Result<RepairResult, RepairError> {
    let n = surface.n_vars();
    check_len(system.n_vars(), n)?;
    let prices = surface.prices();

    let bands = match config.objective {
        Objective::L1 => None,
        Objective::L1ba => {
            let (ask, bid) = check_spreads(surface)?;
            let max = ask
                .iter()
                .chain(&bid)
                .copied()
                .fold(f64::INFINITY, f64::min);
            let d0 = match config.delta0_override {
                Some(v) if v > 0.0 && v <= max => v,
                Some(v) => return Err(RepairError::InvalidDelta0 { value: v, max }),
                None => compute_delta0(surface),
            };
            Some((ask, bid, d0))
        }
    };

    let residuals: Vec<f64> = system.rows().iter().map(|r| r.residual(&prices)).collect();
    let (epsilon, iterations) = if residuals.iter().all(|&r| r >= -config.feas_tol) {
        (vec![0.0; n], 0)
    } else {
        let lp = dual_lp(
            system,
            &residuals,
            bands.as_ref().map(|(a, b, d)| (&a[..], &b[..], *d)),
        );
        let sol = solver.solve(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(RepairError::SolverStatus {
                status: sol.status,
                iterations: sol.iterations,
            });
        }
        (sol.duals.iter().map(|d| -d).collect(), sol.iterations)
    };

    let repaired: Vec<f64> = prices.iter().zip(&epsilon).map(|(c, e)| c + e).collect();
    let min_residual = system
        .min_residual(&repaired)
        .expect("length checked above");
    if let Some(r) = min_residual {
        if r < -10.0 * config.feas_tol {
            return Err(RepairError::ResidualViolation { residual: r });
        }
    }
    let objective_value = match &bands {
        None => epsilon.iter().map(|e| e.abs()).sum(),
        Some((ask, bid, d0)) => epsilon
            .iter()
            .enumerate()
            .map(|(j, &e)| ba_cost(e, ask[j], bid[j], *d0))
            .sum(),
    };
    let (n_perturbed, n_effective) = count_perturbations(&epsilon, surface, config.zero_tol)?;
    Ok(RepairResult {
        objective: config.objective,
        epsilon,
        repaired,
        objective_value,
        n_perturbed,
        n_effective,
        delta0_used: bands.map(|b| b.2),
        min_residual,
        iterations,
    })
}

/// Dual of the repair problem; see the module docs.
fn dual_lp(
    system: &ConstraintSystem,
    residuals: &[f64],
    bands: Option<(&[f64], &[f64], f64)>,
) -> LinearProgram {
    let n = system.n_vars();
    let r = system.len();
    let mut by_var: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in system.rows().iter().enumerate() {
        for &(v, a) in &row.terms {
            by_var[v].push((i, a));
        }
    }
    let extra = if bands.is_some() { 2 * n } else { 0 };
    let mut lp = LinearProgram::new(r + extra);
    for (i, &res) in residuals.iter().enumerate() {
        lp.set_cost(i, res);
    }
    for (j, mut terms) in by_var.into_iter().enumerate() {
        match bands {
            None => {
                lp.add_range_row(terms, -1.0, 1.0);
            }
            Some((ask, bid, d0)) => {
                let (p, q) = (r + 2 * j, r + 2 * j + 1);
                lp.set_cost(p, ask[j]);
                lp.set_cost(q, bid[j]);
                lp.set_bounds(p, 0.0, (1.0 - d0 / ask[j]).max(0.0));
                lp.set_bounds(q, 0.0, (1.0 - d0 / bid[j]).max(0.0));
                terms.push((p, -1.0));
                terms.push((q, 1.0));
                lp.add_range_row(terms, -d0 / bid[j], d0 / ask[j]);
            }
        }
    }
    lp
}

/// Direct ℓ¹ repair LP over `theta = [eps+, eps-] >= 0`:
/// minimize `sum(theta)` subject to `A (eps+ - eps-) >= b - A c`.
pub fn primal_l1_lp(system: &ConstraintSystem, prices: &[f64]) -> LinearProgram {
    let n = system.n_vars();
    let mut lp = LinearProgram::new(2 * n);
    for j in 0..2 * n {
        lp.set_cost(j, 1.0);
    }
    for row in system.rows() {
        let terms = row
            .terms
            .iter()
            .flat_map(|&(v, a)| [(v, a), (n + v, -a)])
            .collect();
        lp.add_ge_row(terms, -row.residual(prices));
    }
    lp
}

/// Direct bid-ask-aware repair LP over `[eps, t]`, both free: minimize
/// `sum(t)` subject to the four epigraph rows per price and `A eps >= b - A c`.
pub fn primal_l1ba_lp(
    system: &ConstraintSystem,
    prices: &[f64],
    ask: &[f64],
    bid: &[f64],
    d0: f64,
) -> LinearProgram {
    let n = system.n_vars();
    let mut lp = LinearProgram::new(2 * n);
    for j in 0..2 * n {
        lp.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY);
    }
    for j in 0..n {
        let t = n + j;
        lp.set_cost(t, 1.0);
        lp.add_ge_row(vec![(t, 1.0), (j, 1.0)], d0 - bid[j]);
        lp.add_ge_row(vec![(t, 1.0), (j, -1.0)], d0 - ask[j]);
        lp.add_ge_row(vec![(t, 1.0), (j, d0 / bid[j])], 0.0);
        lp.add_ge_row(vec![(t, 1.0), (j, -d0 / ask[j])], 0.0);
    }
    for row in system.rows() {
        lp.add_ge_row(row.terms.to_vec(), -row.residual(prices));
    }
    lp
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PortfolioLeg {
    pub quote: usize,
    pub node: NodeId,
    pub side: Side,
    /// Normalized execution price (ask when buying, bid when selling).
    pub price: f64,
    /// Execution price in currency, `price * D * F`.
    pub premium: f64,
    /// Row coefficient of the leg.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ArbitragePortfolio {
    pub row: usize,
    pub kind: ConstraintKind,
    pub legs: Vec<PortfolioLeg>,
    /// Row activity with every leg executed at its ask or bid.
    pub extremal: f64,
    pub bound: f64,
    pub immediate_profit: f64,
}

/// Value of a row when positive-weight legs are bought at the ask and
/// negative-weight legs sold at the bid.
pub fn extremal_activity(terms: &[(usize, f64)], prices: &[f64], ask: &[f64], bid: &[f64]) -> f64 {
    terms
        .iter()
        .map(|&(v, a)| {
            if a >= 0.0 {
                a * (prices[v] + ask[v])
            } else {
                a * (prices[v] - bid[v])
            }
        })
        .sum()
}

/// Every row that stays violated even at executable prices, most profitable first.
pub fn extract_executable_arbitrage(
    system: &ConstraintSystem,
    surface: &NormalizedSurface,
    feas_tol: f64,
) -> Vec<ArbitragePortfolio> {
    let prices = surface.prices();
    let (ask, bid) = (surface.ask_spreads(), surface.bid_spreads());
    let mut out = Vec::new();
    for (i, row) in system.rows().iter().enumerate() {
        let extremal = extremal_activity(&row.terms, &prices, &ask, &bid);
        if extremal >= row.bound - feas_tol {
            continue;
        }
        let legs = row
            .terms
            .iter()
            .map(|&(v, a)| {
                let node = surface.var_node(v);
                let slice = surface.slice(node.expiry);
                let (side, price) = if a >= 0.0 {
                    (Side::Buy, prices[v] + ask[v])
                } else {
                    (Side::Sell, prices[v] - bid[v])
                };
                PortfolioLeg {
                    quote: surface.source_of(v),
                    node,
                    side,
                    price,
                    premium: price * slice.discount * slice.forward,
                    weight: a,
                }
            })
            .collect();
        out.push(ArbitragePortfolio {
            row: i,
            kind: row.kind,
            legs,
            extremal,
            bound: row.bound,
            immediate_profit: row.bound - extremal,
        });
    }
    out.sort_by(|a, b| {
        b.immediate_profit
            .total_cmp(&a.immediate_profit)
            .then(a.row.cmp(&b.row))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::build_constraints;
    use crate::normalize::{normalize_surface, CurvePoint, OptionQuote};

    fn single(nodes: &[(f64, f64, f64)]) -> NormalizedSurface {
        let quotes: Vec<_> = nodes
            .iter()
            .map(|&(k, c, s)| OptionQuote::new(1.0, k, c).with_bid_ask(c - s, c + s))
            .collect();
        normalize_surface(&quotes, &[CurvePoint::new(1.0, 1.0, 1.0)]).unwrap()
    }

    #[test]
    fn delta0_rule() {
        let s = single(&[
            (1.0, 0.3, 0.01),
            (1.5, 0.2, 0.01),
            (2.0, 0.1, 0.01),
            (3.0, 0.05, 0.01),
        ]);
        let s = s.with_spreads(&[0.25; 4], &[0.25; 4]).unwrap();
        assert_eq!(compute_delta0(&s), 0.25);
        let s = single(&[(1.0, 0.3, 0.01), (2.0, 0.1, 0.001)]);
        assert!((compute_delta0(&s) - 0.001).abs() < 1e-15);
    }

    #[test]
    fn counting() {
        let s = single(&[(1.0, 0.3, 0.05), (1.5, 0.2, 0.05), (2.0, 0.1, 0.05)]);
        assert_eq!(
            count_perturbations(&[0.1, 0.0, -0.02], &s, 1e-7).unwrap(),
            (2, 1)
        );
        assert_eq!(count_perturbations(&[0.0; 3], &s, 1e-7).unwrap(), (0, 0));
        let da = s.ask_spreads()[0];
        assert_eq!(
            count_perturbations(&[da, 0.0, 0.0], &s, 1e-7).unwrap(),
            (1, 0)
        );
        assert!(count_perturbations(&[0.0; 2], &s, 1e-7).is_err());
    }

    #[test]
    fn ba_cost_shape() {
        let (da, db, d0) = (0.2, 0.1, 0.05);
        assert_eq!(ba_cost(0.0, da, db, d0), 0.0);
        assert!((ba_cost(da, da, db, d0) - d0).abs() < 1e-15);
        assert!((ba_cost(-db, da, db, d0) - d0).abs() < 1e-15);
        assert!((ba_cost(da + 1.0, da, db, d0) - (d0 + 1.0)).abs() < 1e-12);
        assert!((ba_cost(-db - 1.0, da, db, d0) - (d0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn hand_instance_objective() {
        let s = single(&[(1.0, 0.3, 0.01), (2.0, 0.4, 0.01)]);
        let sys = build_constraints(&s);
        let r = repair_l1(&s, &sys, &RepairConfig::default()).unwrap();
        assert!((r.objective_value - 0.1).abs() < 1e-8);
        assert!(r.min_residual.unwrap() >= -1e-8);
        assert!(r.delta0_used.is_none());
    }

    #[test]
    fn clean_input_is_untouched() {
        let s = single(&[(1.0, 0.3, 0.01), (2.0, 0.1, 0.01)]);
        let sys = build_constraints(&s);
        for cfg in [RepairConfig::l1(), RepairConfig::l1ba()] {
            let r = repair(&s, &sys, &cfg).unwrap();
            assert_eq!(r.epsilon, vec![0.0, 0.0]);
            assert_eq!(r.objective_value, 0.0);
        }
    }

    #[test]
    fn delta0_override_checked() {
        let s = single(&[(1.0, 0.3, 0.01), (2.0, 0.4, 0.01)]);
        let sys = build_constraints(&s);
        let cfg = RepairConfig {
            delta0_override: Some(0.5),
            ..RepairConfig::l1ba()
        };
        assert!(matches!(
            repair(&s, &sys, &cfg),
            Err(RepairError::InvalidDelta0 { .. })
        ));
    }

    #[test]
    fn executable_vertical_spread() {
        let s = single(&[(1.0, 0.3, 0.01), (2.0, 0.4, 0.01)]);
        let sys = build_constraints(&s);
        let ps = extract_executable_arbitrage(&sys, &s, 1e-9);
        assert_eq!(ps.len(), 1);
        let p = &ps[0];
        assert_eq!(p.kind, ConstraintKind::VerticalSpreadLower);
        assert!((p.immediate_profit - 0.08).abs() < 1e-12);
        let buy = p.legs.iter().find(|l| l.side == Side::Buy).unwrap();
        let sell = p.legs.iter().find(|l| l.side == Side::Sell).unwrap();
        assert_eq!(buy.quote, 0);
        assert!((buy.price - 0.31).abs() < 1e-12);
        assert_eq!(sell.quote, 1);
        assert!((sell.price - 0.39).abs() < 1e-12);
    }

    #[test]
    fn wide_bands_hide_the_arbitrage() {
        // raising the wide-band price to its ask is strictly cheapest
        let s = single(&[(1.0, 0.3, 0.1), (2.0, 0.4, 0.08)]);
        let sys = build_constraints(&s);
        assert!(extract_executable_arbitrage(&sys, &s, 1e-9).is_empty());
        let r = repair_l1ba(&s, &sys, &RepairConfig::default()).unwrap();
        assert!((r.delta0_used.unwrap() - 0.08).abs() < 1e-12);
        assert!((r.objective_value - 0.08).abs() < 1e-9);
        assert!((r.epsilon[0] - 0.1).abs() < 1e-9 && r.epsilon[1].abs() < 1e-9);
        assert_eq!(r.n_effective, 0);
    }
}
