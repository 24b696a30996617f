//! Brute-force enumeration of every spread and butterfly test strategy.
//!
//! Deliberately independent of the reduced builder: it walks all node pairs
//! and triples on the augmented surface and evaluates each strategy directly
//! from prices. Cost is cubic in the number of nodes.

use serde::Serialize;

use super::{check_tolerance, Category, ConstraintError, ViolationReport};
use crate::normalize::NormalizedSurface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum StrategyKind {
    Outright,
    VerticalSpread,
    /// Upper bound `VS <= 1` on a same-expiry pair.
    VerticalSpreadCap,
    CalendarSpread,
    CalendarVerticalSpread,
    VerticalButterfly,
    CalendarButterfly,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::Outright,
        StrategyKind::VerticalSpread,
        StrategyKind::VerticalSpreadCap,
        StrategyKind::CalendarSpread,
        StrategyKind::CalendarVerticalSpread,
        StrategyKind::VerticalButterfly,
        StrategyKind::CalendarButterfly,
    ];
}

impl Category for StrategyKind {
    fn all() -> &'static [Self] {
        &Self::ALL
    }

    fn is_calendar(self) -> bool {
        matches!(
            self,
            StrategyKind::CalendarSpread
                | StrategyKind::CalendarVerticalSpread
                | StrategyKind::CalendarButterfly
        )
    }
}

struct Point {
    k: f64,
    c: f64,
    real: bool,
}

/// Scaled value of `sum(coef * c)`; the scale is the largest coefficient on a
/// non-augmented node, matching the reduced rows.
fn scaled(terms: &[(&Point, f64)], constant: f64) -> f64 {
    let value: f64 = terms.iter().map(|(p, a)| a * p.c).sum::<f64>() + constant;
    let scale = terms
        .iter()
        .filter(|(p, _)| p.real)
        .fold(0.0f64, |m, (_, a)| m.max(a.abs()));
    if scale > 0.0 {
        value / scale
    } else {
        value
    }
}

/// Checks `prices` against the complete family of outrights, spreads and
/// butterflies. Strikes within `strike_tol` count as equal.
pub fn enumerate_full_cousot(
    surface: &NormalizedSurface,
    prices: &[f64],
    tol: f64,
    strike_tol: f64,
) -> Result<ViolationReport<StrategyKind>, ConstraintError> {
    if prices.len() != surface.n_vars() {
        return Err(ConstraintError::DimensionMismatch {
            expected: surface.n_vars(),
            got: prices.len(),
        });
    }
    check_tolerance(tol)?;

    let pts: Vec<Vec<Point>> = surface
        .slices()
        .iter()
        .map(|s| {
            s.nodes()
                .iter()
                .map(|n| Point {
                    k: n.strike,
                    c: n.var.map_or(1.0, |v| prices[v]),
                    real: n.var.is_some(),
                })
                .collect()
        })
        .collect();
    let m = pts.len();
    let mut checked: Vec<(StrategyKind, f64)> = Vec::new();

    for slice in &pts {
        for p in slice.iter().filter(|p| p.real) {
            checked.push((StrategyKind::Outright, p.c));
        }
    }

    // Spreads: long the lower strike on the later (or same) expiry, short the
    // higher-or-equal strike on the earlier one.
    for i1 in 0..m {
        for i2 in i1..m {
            for a in &pts[i1] {
                for b in &pts[i2] {
                    if !a.real && !b.real {
                        continue;
                    }
                    let value = scaled(&[(b, 1.0), (a, -1.0)], 0.0);
                    if (a.k - b.k).abs() <= strike_tol {
                        if i1 != i2 {
                            checked.push((StrategyKind::CalendarSpread, value));
                        }
                    } else if a.k > b.k {
                        if i1 == i2 {
                            checked.push((StrategyKind::VerticalSpread, value));
                            // (c_b - c_a) <= (k_a - k_b)
                            let cap = scaled(&[(a, 1.0), (b, -1.0)], a.k - b.k);
                            checked.push((StrategyKind::VerticalSpreadCap, cap));
                        } else {
                            checked.push((StrategyKind::CalendarVerticalSpread, value));
                        }
                    }
                }
            }
        }
    }

    // Butterflies: middle on expiry i, wings on expiries not before i.
    for i in 0..m {
        for mid in pts[i].iter().filter(|p| p.real) {
            for (il, left) in pts.iter().enumerate().skip(i) {
                for l in left.iter().filter(|p| p.k < mid.k - strike_tol) {
                    for (ir, right) in pts.iter().enumerate().skip(i) {
                        for r in right.iter().filter(|p| p.k > mid.k + strike_tol) {
                            let kind = if il == i && ir == i {
                                StrategyKind::VerticalButterfly
                            } else {
                                StrategyKind::CalendarButterfly
                            };
                            // slope(mid, r) - slope(l, mid), times both gaps
                            let value = scaled(
                                &[(r, mid.k - l.k), (mid, -(r.k - l.k)), (l, r.k - mid.k)],
                                0.0,
                            );
                            checked.push((kind, value));
                        }
                    }
                }
            }
        }
    }

    Ok(ViolationReport::collect(checked, tol))
}
