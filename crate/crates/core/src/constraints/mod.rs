//! Reduced static no-arbitrage constraints in the linear form `A c >= b`.
//!
//! Every test strategy on the normalized surface is either a spread (slope
//! between two nodes) or a butterfly (difference of two slopes). Slopes are
//! multiplied through by the positive strike gaps so each row is affine in
//! the prices, and each row is then divided by its largest coefficient so
//! detection tolerances read in price units. Contributions of the augmented
//! zero-strike nodes (`c = 1`) are folded into the bound.
//!
//! The builder emits only the local inequalities needed to imply the full
//! family of test strategies; [`cousot::enumerate_full_cousot`] enumerates the
//! full family and serves as a brute-force cross-check.

pub mod cousot;

use std::collections::BTreeMap;
use std::fmt::Debug;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::{NodeId, NormalizedSurface};

pub use cousot::{enumerate_full_cousot, StrategyKind};

/// Strikes of different expiries closer than this are treated as equal.
pub const STRIKE_MATCH_TOL: f64 = 1e-9;
/// Default violation tolerance in normalized price units.
pub const DEFAULT_DETECT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("nodes {0:?} and {1:?} have equal strikes")]
    EqualStrikes(NodeId, NodeId),
    #[error("expected {expected} prices, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tolerance must be finite and non-negative, got {0}")]
    InvalidTolerance(f64),
}

/// Something a violation can be attributed to.
pub trait Category: Copy + Ord + Debug + Serialize + 'static {
    fn all() -> &'static [Self];
    fn is_calendar(self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// C1: `c^i_{n_i} >= 0`.
    Outright,
    /// C2: `VS^i_{j,j-1} >= 0`.
    VerticalSpreadLower,
    /// C2: `VS^i_{1,0} <= 1`.
    VerticalSpreadUpperAtZero,
    /// C3: adjacent vertical butterflies.
    VerticalButterfly,
    /// C4: equal-strike calendar spreads.
    CalendarSpread,
    /// C5: later-expiry nodes between two adjacent strikes.
    CalendarVerticalSpread,
    /// C6.1: a single later-expiry node next to an anchor.
    CalendarButterflyAbsolute,
    /// C6.2: two later-expiry nodes on either side of an anchor.
    CalendarButterflyRelative,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 8] = [
        ConstraintKind::Outright,
        ConstraintKind::VerticalSpreadLower,
        ConstraintKind::VerticalSpreadUpperAtZero,
        ConstraintKind::VerticalButterfly,
        ConstraintKind::CalendarSpread,
        ConstraintKind::CalendarVerticalSpread,
        ConstraintKind::CalendarButterflyAbsolute,
        ConstraintKind::CalendarButterflyRelative,
    ];

    /// Short category label (`C1` .. `C6.2`).
    pub fn label(self) -> &'static str {
        match self {
            ConstraintKind::Outright => "C1",
            ConstraintKind::VerticalSpreadLower | ConstraintKind::VerticalSpreadUpperAtZero => "C2",
            ConstraintKind::VerticalButterfly => "C3",
            ConstraintKind::CalendarSpread => "C4",
            ConstraintKind::CalendarVerticalSpread => "C5",
            ConstraintKind::CalendarButterflyAbsolute => "C6.1",
            ConstraintKind::CalendarButterflyRelative => "C6.2",
        }
    }
}

impl Category for ConstraintKind {
    fn all() -> &'static [Self] {
        &Self::ALL
    }

    fn is_calendar(self) -> bool {
        matches!(
            self,
            ConstraintKind::CalendarSpread
                | ConstraintKind::CalendarVerticalSpread
                | ConstraintKind::CalendarButterflyAbsolute
                | ConstraintKind::CalendarButterflyRelative
        )
    }
}

/// One inequality `sum(coef * c[var]) >= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub kind: ConstraintKind,
    pub terms: ArrayVec<(usize, f64), 3>,
    pub bound: f64,
    /// Participating nodes, augmented ones included.
    pub nodes: ArrayVec<NodeId, 3>,
}

impl ConstraintRow {
    pub fn activity(&self, prices: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * prices[v]).sum()
    }

    pub fn residual(&self, prices: &[f64]) -> f64 {
        self.activity(prices) - self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    rows: Vec<ConstraintRow>,
    n_vars: usize,
    counts: BTreeMap<ConstraintKind, usize>,
}

impl ConstraintSystem {
    pub fn rows(&self) -> &[ConstraintRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.counts.get(&kind).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<ConstraintKind, usize> {
        &self.counts
    }

    fn check_len(&self, got: usize) -> Result<(), ConstraintError> {
        if got != self.n_vars {
            return Err(ConstraintError::DimensionMismatch {
                expected: self.n_vars,
                got,
            });
        }
        Ok(())
    }

    pub fn residuals(&self, prices: &[f64]) -> Result<Vec<f64>, ConstraintError> {
        self.check_len(prices.len())?;
        Ok(self.rows.iter().map(|r| r.residual(prices)).collect())
    }

    /// Smallest row residual, or `None` for an empty system.
    pub fn min_residual(&self, prices: &[f64]) -> Result<Option<f64>, ConstraintError> {
        Ok(self.residuals(prices)?.into_iter().reduce(f64::min))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub strike_match_tol: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            strike_match_tol: STRIKE_MATCH_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation<K> {
    pub index: usize,
    pub kind: K,
    pub residual: f64,
}

/// Aggregated violations of a price vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ViolationReport<K: Category> {
    pub total: usize,
    pub per_category: BTreeMap<K, usize>,
    /// Most negative residual over everything checked (may be positive).
    pub worst_residual: Option<f64>,
    pub violations: Vec<Violation<K>>,
    pub calendar_fraction: f64,
}

impl<K: Category> ViolationReport<K> {
    pub(crate) fn collect(checked: impl IntoIterator<Item = (K, f64)>, tol: f64) -> Self {
        let mut per_category: BTreeMap<K, usize> = K::all().iter().map(|&k| (k, 0)).collect();
        let mut worst: Option<f64> = None;
        let mut violations = Vec::new();
        for (index, (kind, residual)) in checked.into_iter().enumerate() {
            worst = Some(worst.map_or(residual, |w| w.min(residual)));
            if residual < -tol {
                *per_category.entry(kind).or_insert(0) += 1;
                violations.push(Violation {
                    index,
                    kind,
                    residual,
                });
            }
        }
        let total = violations.len();
        let calendar = violations.iter().filter(|v| v.kind.is_calendar()).count();
        Self {
            total,
            per_category,
            worst_residual: worst,
            violations,
            calendar_fraction: if total == 0 {
                0.0
            } else {
                calendar as f64 / total as f64
            },
        }
    }

    pub fn count(&self, kind: K) -> usize {
        self.per_category.get(&kind).copied().unwrap_or(0)
    }

    pub fn is_clean(&self) -> bool {
        self.total == 0
    }
}

pub(crate) fn check_tolerance(tol: f64) -> Result<(), ConstraintError> {
    if tol.is_finite() && tol >= 0.0 {
        Ok(())
    } else {
        Err(ConstraintError::InvalidTolerance(tol))
    }
}

/// Slope of the chord through nodes `a` and `b` on the `(k, c)` plane.
pub fn beta(surface: &NormalizedSurface, a: NodeId, b: NodeId) -> Result<f64, ConstraintError> {
    let (na, nb) = (surface.node(a), surface.node(b));
    let dk = na.strike - nb.strike;
    if dk == 0.0 {
        return Err(ConstraintError::EqualStrikes(a, b));
    }
    Ok((na.price - nb.price) / dk)
}

/// Checks every row of `system` against `prices`; rows with residual below
/// `-tol` are reported.
pub fn detect_violations(
    system: &ConstraintSystem,
    prices: &[f64],
    tol: f64,
) -> Result<ViolationReport<ConstraintKind>, ConstraintError> {
    system.check_len(prices.len())?;
    check_tolerance(tol)?;
    Ok(ViolationReport::collect(
        system.rows.iter().map(|r| (r.kind, r.residual(prices))),
        tol,
    ))
}

pub fn build_constraints(surface: &NormalizedSurface) -> ConstraintSystem {
    build_constraints_with(surface, &BuildOptions::default())
}

pub fn build_constraints_with(
    surface: &NormalizedSurface,
    opts: &BuildOptions,
) -> ConstraintSystem {
    let mut b = Builder {
        surface,
        tol: opts.strike_match_tol,
        rows: Vec::new(),
    };
    b.outrights();
    b.vertical_spreads();
    b.vertical_butterflies();
    b.calendar_spreads();
    b.calendar_vertical_spreads();
    b.calendar_butterflies_absolute();
    b.calendar_butterflies_relative();

    let mut counts: BTreeMap<ConstraintKind, usize> =
        ConstraintKind::ALL.iter().map(|&k| (k, 0)).collect();
    for r in &b.rows {
        *counts.entry(r.kind).or_insert(0) += 1;
    }
    ConstraintSystem {
        rows: b.rows,
        n_vars: surface.n_vars(),
        counts,
    }
}

/// A linear expression over nodes plus a constant, read as `expr >= 0`.
struct Form {
    terms: ArrayVec<(NodeId, f64), 3>,
    constant: f64,
}

impl Form {
    /// Spread between a higher-or-equal strike node `hi` on the earlier
    /// (or same) expiry and `lo`: `c_lo - c_hi >= 0`.
    fn spread(hi: NodeId, lo: NodeId) -> Self {
        let mut terms = ArrayVec::new();
        terms.push((lo, 1.0));
        terms.push((hi, -1.0));
        Self {
            terms,
            constant: 0.0,
        }
    }

    /// Convexity through `left < mid < right`, multiplied by both strike gaps.
    fn butterfly(s: &NormalizedSurface, left: NodeId, mid: NodeId, right: NodeId) -> Self {
        let (kl, km, kr) = (
            s.node(left).strike,
            s.node(mid).strike,
            s.node(right).strike,
        );
        let mut terms = ArrayVec::new();
        terms.push((left, kr - km));
        terms.push((mid, -(kr - kl)));
        terms.push((right, km - kl));
        Self {
            terms,
            constant: 0.0,
        }
    }

    fn into_row(self, kind: ConstraintKind, s: &NormalizedSurface) -> Option<ConstraintRow> {
        let mut terms = ArrayVec::new();
        let mut nodes = ArrayVec::new();
        let mut bound = -self.constant;
        for (id, coef) in self.terms {
            nodes.push(id);
            match s.node(id).var {
                Some(v) => terms.push((v, coef)),
                None => bound -= coef,
            }
        }
        let scale = terms
            .iter()
            .fold(0.0f64, |m, &(_, a): &(usize, f64)| m.max(a.abs()));
        if scale == 0.0 {
            return None;
        }
        for t in terms.iter_mut() {
            t.1 /= scale;
        }
        Some(ConstraintRow {
            kind,
            terms,
            bound: bound / scale,
            nodes,
        })
    }
}

struct Builder<'a> {
    surface: &'a NormalizedSurface,
    tol: f64,
    rows: Vec<ConstraintRow>,
}

impl Builder<'_> {
    fn push(&mut self, kind: ConstraintKind, form: Form) {
        if let Some(row) = form.into_row(kind, self.surface) {
            self.rows.push(row);
        }
    }

    fn strike(&self, id: NodeId) -> f64 {
        self.surface.node(id).strike
    }

    /// Nodes of expiries after `i_star` with strike strictly inside `(lo, hi)`
    /// (`hi = None` means unbounded above), ordered by `(expiry, strike)`.
    fn later_between(&self, i_star: usize, lo: f64, hi: Option<f64>) -> Vec<NodeId> {
        let mut out = Vec::new();
        for i in i_star + 1..self.surface.n_expiries() {
            let nodes = self.surface.slice(i).nodes();
            let start = nodes.partition_point(|n| n.strike <= lo + self.tol);
            let end = match hi {
                Some(h) => nodes.partition_point(|n| n.strike < h - self.tol),
                None => nodes.len(),
            };
            out.extend((start.max(1)..end.max(start)).map(|j| NodeId::new(i, j)));
        }
        out
    }

    fn outrights(&mut self) {
        for i in 0..self.surface.n_expiries() {
            let id = NodeId::new(i, self.surface.slice(i).last());
            let mut terms = ArrayVec::new();
            terms.push((id, 1.0));
            self.push(
                ConstraintKind::Outright,
                Form {
                    terms,
                    constant: 0.0,
                },
            );
        }
    }

    fn vertical_spreads(&mut self) {
        for i in 0..self.surface.n_expiries() {
            let n = self.surface.slice(i).last();
            for j in 1..=n {
                self.push(
                    ConstraintKind::VerticalSpreadLower,
                    Form::spread(NodeId::new(i, j), NodeId::new(i, j - 1)),
                );
            }
            // (c_0 - c_1) / (k_1 - k_0) <= 1  <=>  (k_1 - k_0) - c_0 + c_1 >= 0
            let (a0, a1) = (NodeId::new(i, 0), NodeId::new(i, 1));
            let mut terms = ArrayVec::new();
            terms.push((a0, -1.0));
            terms.push((a1, 1.0));
            let gap = self.strike(a1) - self.strike(a0);
            self.push(
                ConstraintKind::VerticalSpreadUpperAtZero,
                Form {
                    terms,
                    constant: gap,
                },
            );
        }
    }

    fn vertical_butterflies(&mut self) {
        for i in 0..self.surface.n_expiries() {
            let n = self.surface.slice(i).last();
            for j in 1..n {
                let f = Form::butterfly(
                    self.surface,
                    NodeId::new(i, j - 1),
                    NodeId::new(i, j),
                    NodeId::new(i, j + 1),
                );
                self.push(ConstraintKind::VerticalButterfly, f);
            }
        }
    }

    fn calendar_spreads(&mut self) {
        let m = self.surface.n_expiries();
        for i1 in 0..m {
            for i2 in i1 + 1..m {
                let later = self.surface.slice(i2).nodes();
                for j1 in 1..=self.surface.slice(i1).last() {
                    let k = self.surface.slice(i1).strike(j1);
                    let start = later.partition_point(|n| n.strike < k - self.tol);
                    for (j2, node) in later.iter().enumerate().skip(start.max(1)) {
                        if node.strike > k + self.tol {
                            break;
                        }
                        self.push(
                            ConstraintKind::CalendarSpread,
                            Form::spread(NodeId::new(i1, j1), NodeId::new(i2, j2)),
                        );
                    }
                }
            }
        }
    }

    fn calendar_vertical_spreads(&mut self) {
        for i in 0..self.surface.n_expiries() {
            let slice = self.surface.slice(i);
            for j in 1..=slice.last() {
                let anchor = NodeId::new(i, j);
                for other in self.later_between(i, slice.strike(j - 1), Some(slice.strike(j))) {
                    self.push(
                        ConstraintKind::CalendarVerticalSpread,
                        Form::spread(anchor, other),
                    );
                }
            }
        }
    }

    fn calendar_butterflies_absolute(&mut self) {
        let kind = ConstraintKind::CalendarButterflyAbsolute;
        let s = self.surface;
        for i in 0..s.n_expiries() {
            let slice = s.slice(i);
            let n = slice.last();
            let id = |j| NodeId::new(i, j);
            let mut batch: Vec<(NodeId, Form)> = Vec::new();
            // later node just left of anchor j, own right neighbour j+1
            for j in 1..n {
                for left in self.later_between(i, slice.strike(j - 1), Some(slice.strike(j))) {
                    batch.push((id(j), Form::butterfly(s, left, id(j), id(j + 1))));
                }
            }
            // own left neighbour j-1, later node just right of anchor j
            for j in 1..n {
                for right in self.later_between(i, slice.strike(j), Some(slice.strike(j + 1))) {
                    batch.push((id(j), Form::butterfly(s, id(j - 1), id(j), right)));
                }
            }
            // beyond the last strike
            for right in self.later_between(i, slice.strike(n), None) {
                batch.push((id(n), Form::butterfly(s, id(n - 1), id(n), right)));
            }
            self.push_sorted(kind, batch);
        }
    }

    fn calendar_butterflies_relative(&mut self) {
        let kind = ConstraintKind::CalendarButterflyRelative;
        let s = self.surface;
        for i in 0..s.n_expiries() {
            let slice = s.slice(i);
            let n = slice.last();
            for j in 1..=n {
                let mid = NodeId::new(i, j);
                let lefts = self.later_between(i, slice.strike(j - 1), Some(slice.strike(j)));
                if lefts.is_empty() {
                    continue;
                }
                let upper = (j < n).then(|| slice.strike(j + 1));
                let rights = self.later_between(i, slice.strike(j), upper);
                for &left in &lefts {
                    for &right in &rights {
                        self.push(kind, Form::butterfly(s, left, mid, right));
                    }
                }
            }
        }
    }

    /// Emits rows ordered by anchor, then by the remaining participating nodes.
    fn push_sorted(&mut self, kind: ConstraintKind, mut batch: Vec<(NodeId, Form)>) {
        batch.sort_by(|(a, fa), (b, fb)| {
            let ka = fa.terms.iter().map(|t| t.0);
            let kb = fb.terms.iter().map(|t| t.0);
            a.cmp(b).then_with(|| ka.cmp(kb))
        });
        for (_, f) in batch {
            self.push(kind, f);
        }
    }
}
