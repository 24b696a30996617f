//! Conversion between raw call quotes and forward-normalized coordinates.
//!
//! A quote with premium `C`, strike `K` and expiry `T` maps to the normalized
//! pair `k = K / F(T)`, `c = C / (D(T) F(T))`. Every expiry slice is prefixed
//! with a synthetic zero-strike node (`k = 0`, `c = 1`) standing for the
//! forward itself, so that option-versus-forward relations can be expressed
//! with the same machinery as option-versus-option ones.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum half-spread (normalized units) assigned when a side is missing or degenerate.
pub const SPREAD_FLOOR: f64 = 1e-8;
/// Absolute tolerance for matching a quote expiry to a curve point.
pub const EXPIRY_MATCH_TOL: f64 = 1e-12;
/// Relative tolerance under which two normalized strikes of one expiry collide.
pub const STRIKE_DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalizeError {
    #[error("no quotes supplied")]
    EmptyQuotes,
    #[error("quote {quote}: no curve point for expiry {expiry}")]
    MissingCurve { quote: usize, expiry: f64 },
    #[error("curve points {first} and {second} share expiry {expiry}")]
    DuplicateCurve {
        first: usize,
        second: usize,
        expiry: f64,
    },
    #[error("quotes {first} and {second} share expiry {expiry} and strike {strike}")]
    DuplicateStrike {
        first: usize,
        second: usize,
        expiry: f64,
        strike: f64,
    },
    #[error("{what} out of domain: {value}")]
    NonPositiveInput { what: String, value: f64 },
    #[error("quote {quote}: mid {mid} outside [bid {bid}, ask {ask}]")]
    CrossedQuote {
        quote: usize,
        bid: f64,
        mid: f64,
        ask: f64,
    },
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// One raw market observation of a European call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub expiry: f64,
    pub strike: f64,
    pub mid: f64,
    pub bid: Option<f64>,
    pub ask: Option<f64>,
}

impl OptionQuote {
    pub fn new(expiry: f64, strike: f64, mid: f64) -> Self {
        Self {
            expiry,
            strike,
            mid,
            bid: None,
            ask: None,
        }
    }

    pub fn with_bid_ask(mut self, bid: f64, ask: f64) -> Self {
        self.bid = Some(bid);
        self.ask = Some(ask);
        self
    }
}

/// Discount factor and forward observed for one expiry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub expiry: f64,
    pub discount: f64,
    pub forward: f64,
}

impl CurvePoint {
    pub fn new(expiry: f64, discount: f64, forward: f64) -> Self {
        Self {
            expiry,
            discount,
            forward,
        }
    }
}

/// Position of a node on the surface: expiry slice `expiry`, strike slot
/// `strike` (slot 0 is the augmented zero-strike node).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeId {
    pub expiry: usize,
    pub strike: usize,
}

impl NodeId {
    pub const fn new(expiry: usize, strike: usize) -> Self {
        Self { expiry, strike }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    /// Forward moneyness `K / F`.
    pub strike: f64,
    /// Normalized premium `C / (D F)`.
    pub price: f64,
    pub ask_spread: f64,
    pub bid_spread: f64,
    /// Index of the originating quote; `None` for the augmented node.
    pub source: Option<usize>,
    /// Position in the price vector; `None` for the augmented node.
    pub var: Option<usize>,
}

impl Node {
    fn augmented() -> Self {
        Self {
            strike: 0.0,
            price: 1.0,
            ask_spread: 0.0,
            bid_spread: 0.0,
            source: None,
            var: None,
        }
    }

    pub fn is_augmented(&self) -> bool {
        self.var.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpirySlice {
    pub expiry: f64,
    pub discount: f64,
    pub forward: f64,
    nodes: Vec<Node>,
}

impl ExpirySlice {
    /// All nodes, augmented node first, strikes strictly increasing.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Index of the last (highest-strike) node.
    pub fn last(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn strike(&self, j: usize) -> f64 {
        self.nodes[j].strike
    }

    /// `D * F`, the currency value of one normalized price unit.
    pub fn scale(&self) -> f64 {
        self.discount * self.forward
    }
}

/// Sorted, augmented grid of normalized strikes and prices.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSurface {
    slices: Vec<ExpirySlice>,
    vars: Vec<NodeId>,
}

impl NormalizedSurface {
    pub fn slices(&self) -> &[ExpirySlice] {
        &self.slices
    }

    pub fn slice(&self, i: usize) -> &ExpirySlice {
        &self.slices[i]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.slices[id.expiry].nodes[id.strike]
    }

    /// Number of expiries `m`.
    pub fn n_expiries(&self) -> usize {
        self.slices.len()
    }

    /// Number of non-augmented nodes `N`.
    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    /// Node carrying price-vector entry `var`.
    pub fn var_node(&self, var: usize) -> NodeId {
        self.vars[var]
    }

    /// Source quote index of price-vector entry `var`.
    pub fn source_of(&self, var: usize) -> usize {
        self.node(self.vars[var])
            .source
            .expect("non-augmented nodes carry a source index")
    }

    fn var_nodes(&self) -> impl Iterator<Item = &Node> + '_ {
        self.vars.iter().map(move |&id| self.node(id))
    }

    pub fn prices(&self) -> Vec<f64> {
        self.var_nodes().map(|n| n.price).collect()
    }

    pub fn ask_spreads(&self) -> Vec<f64> {
        self.var_nodes().map(|n| n.ask_spread).collect()
    }

    pub fn bid_spreads(&self) -> Vec<f64> {
        self.var_nodes().map(|n| n.bid_spread).collect()
    }

    /// Price of any node, augmented or not, under an alternative price vector.
    pub fn price_in(&self, id: NodeId, prices: &[f64]) -> f64 {
        match self.node(id).var {
            Some(v) => prices[v],
            None => 1.0,
        }
    }

    /// Same grid with the non-augmented prices replaced.
    pub fn with_prices(&self, prices: &[f64]) -> Result<Self, NormalizeError> {
        self.check_len(prices.len())?;
        let mut out = self.clone();
        for (v, &id) in self.vars.iter().enumerate() {
            out.slices[id.expiry].nodes[id.strike].price = prices[v];
        }
        Ok(out)
    }

    /// Same grid with the half-spreads replaced; values below the floor are raised to it.
    pub fn with_spreads(&self, ask: &[f64], bid: &[f64]) -> Result<Self, NormalizeError> {
        self.check_len(ask.len())?;
        self.check_len(bid.len())?;
        let mut out = self.clone();
        for (v, &id) in self.vars.iter().enumerate() {
            let node = &mut out.slices[id.expiry].nodes[id.strike];
            node.ask_spread = floor_spread(ask[v]);
            node.bid_spread = floor_spread(bid[v]);
        }
        Ok(out)
    }

    fn check_len(&self, got: usize) -> Result<(), NormalizeError> {
        if got != self.n_vars() {
            return Err(NormalizeError::DimensionMismatch {
                expected: self.n_vars(),
                got,
            });
        }
        Ok(())
    }
}

fn floor_spread(raw: f64) -> f64 {
    if raw.is_finite() && raw > SPREAD_FLOOR {
        raw
    } else {
        SPREAD_FLOOR
    }
}

fn require(what: &str, value: f64, ok: bool) -> Result<(), NormalizeError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(NormalizeError::NonPositiveInput {
            what: what.to_string(),
            value,
        })
    }
}

fn validate_quote(index: usize, q: &OptionQuote) -> Result<(), NormalizeError> {
    require(&format!("quote {index} expiry"), q.expiry, q.expiry > 0.0)?;
    require(&format!("quote {index} strike"), q.strike, q.strike > 0.0)?;
    require(&format!("quote {index} mid"), q.mid, q.mid >= 0.0)?;
    if let Some(bid) = q.bid {
        require(&format!("quote {index} bid"), bid, bid >= 0.0)?;
    }
    if let Some(ask) = q.ask {
        require(&format!("quote {index} ask"), ask, ask >= 0.0)?;
    }
    let bid = q.bid.unwrap_or(q.mid);
    let ask = q.ask.unwrap_or(q.mid);
    if bid > q.mid || q.mid > ask {
        return Err(NormalizeError::CrossedQuote {
            quote: index,
            bid,
            mid: q.mid,
            ask,
        });
    }
    Ok(())
}

/// Builds the normalized, augmented surface from raw quotes and curves.
///
/// Quotes are grouped by expiry (matched to a curve point within
/// [`EXPIRY_MATCH_TOL`]) and sorted by strike. Curve points without quotes
/// are ignored.
pub fn normalize_surface(
    quotes: &[OptionQuote],
    curves: &[CurvePoint],
) -> Result<NormalizedSurface, NormalizeError> {
    if quotes.is_empty() {
        return Err(NormalizeError::EmptyQuotes);
    }
    for (i, cp) in curves.iter().enumerate() {
        require(&format!("curve {i} expiry"), cp.expiry, cp.expiry > 0.0)?;
        require(
            &format!("curve {i} discount"),
            cp.discount,
            cp.discount > 0.0 && cp.discount <= 1.0,
        )?;
        require(&format!("curve {i} forward"), cp.forward, cp.forward > 0.0)?;
    }
    let mut curve_order: Vec<usize> = (0..curves.len()).collect();
    curve_order.sort_by(|&a, &b| curves[a].expiry.total_cmp(&curves[b].expiry));
    for w in curve_order.windows(2) {
        if (curves[w[1]].expiry - curves[w[0]].expiry).abs() <= EXPIRY_MATCH_TOL {
            return Err(NormalizeError::DuplicateCurve {
                first: w[0].min(w[1]),
                second: w[0].max(w[1]),
                expiry: curves[w[0]].expiry,
            });
        }
    }

    // Quote indices bucketed by curve position in `curve_order`.
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); curves.len()];
    for (qi, q) in quotes.iter().enumerate() {
        validate_quote(qi, q)?;
        let pos = curve_order
            .iter()
            .position(|&ci| (curves[ci].expiry - q.expiry).abs() <= EXPIRY_MATCH_TOL)
            .ok_or(NormalizeError::MissingCurve {
                quote: qi,
                expiry: q.expiry,
            })?;
        buckets[pos].push(qi);
    }

    let mut slices = Vec::new();
    let mut vars = Vec::with_capacity(quotes.len());
    for (pos, bucket) in buckets.iter_mut().enumerate() {
        if bucket.is_empty() {
            continue;
        }
        let curve = curves[curve_order[pos]];
        let scale = curve.discount * curve.forward;
        bucket.sort_by(|&a, &b| {
            quotes[a]
                .strike
                .total_cmp(&quotes[b].strike)
                .then(a.cmp(&b))
        });

        let mut nodes = Vec::with_capacity(bucket.len() + 1);
        nodes.push(Node::augmented());
        for &qi in bucket.iter() {
            let q = &quotes[qi];
            let k = q.strike / curve.forward;
            let prev = nodes.last().expect("augmented node present");
            if let Some(prev_src) = prev.source {
                if k - prev.strike <= STRIKE_DEDUP_TOL * k.max(1.0) {
                    return Err(NormalizeError::DuplicateStrike {
                        first: prev_src.min(qi),
                        second: prev_src.max(qi),
                        expiry: curve.expiry,
                        strike: q.strike,
                    });
                }
            }
            let ask = q.ask.map_or(0.0, |a| (a - q.mid) / scale);
            let bid = q.bid.map_or(0.0, |b| (q.mid - b) / scale);
            nodes.push(Node {
                strike: k,
                price: q.mid / scale,
                ask_spread: floor_spread(ask),
                bid_spread: floor_spread(bid),
                source: Some(qi),
                var: None,
            });
        }
        let i = slices.len();
        for (j, node) in nodes.iter_mut().enumerate().skip(1) {
            node.var = Some(vars.len());
            vars.push(NodeId::new(i, j));
        }
        slices.push(ExpirySlice {
            expiry: curve.expiry,
            discount: curve.discount,
            forward: curve.forward,
            nodes,
        });
    }

    Ok(NormalizedSurface { slices, vars })
}

/// Maps normalized prices back to currency premiums, one pair
/// `(quote index, premium)` per quote, ordered by quote index.
pub fn denormalize_prices(
    surface: &NormalizedSurface,
    prices: &[f64],
) -> Result<Vec<(usize, f64)>, NormalizeError> {
    surface.check_len(prices.len())?;
    let mut out: Vec<(usize, f64)> = (0..surface.n_vars())
        .map(|v| {
            let id = surface.var_node(v);
            (
                surface.source_of(v),
                prices[v] * surface.slice(id.expiry).scale(),
            )
        })
        .collect();
    out.sort_by_key(|&(src, _)| src);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn single_quote_unit_discount() {
        let s = normalize_surface(
            &[OptionQuote::new(1.0, 100.0, 5.0)],
            &[CurvePoint::new(1.0, 1.0, 100.0)],
        )
        .unwrap();
        assert_eq!(s.n_expiries(), 1);
        let strikes: Vec<f64> = s.slice(0).nodes().iter().map(|n| n.strike).collect();
        let prices: Vec<f64> = s.slice(0).nodes().iter().map(|n| n.price).collect();
        assert_eq!(strikes, vec![0.0, 1.0]);
        assert_eq!(prices, vec![1.0, 0.05]);
        // no bid/ask: both sides floored
        assert_eq!(s.ask_spreads(), vec![SPREAD_FLOOR]);
        assert_eq!(s.bid_spreads(), vec![SPREAD_FLOOR]);
    }

    #[test]
    fn discounted_quote_with_spreads() {
        let q = OptionQuote::new(0.5, 110.0, 2.0).with_bid_ask(1.8, 2.3);
        let s = normalize_surface(&[q], &[CurvePoint::new(0.5, 0.99, 100.0)]).unwrap();
        let n = s.node(NodeId::new(0, 1));
        assert!(close(n.strike, 1.1, 1e-15));
        assert!(close(n.price, 2.0 / 99.0, 1e-15));
        assert!(close(n.bid_spread, 0.2 / 99.0, 1e-12));
        assert!(close(n.ask_spread, 0.3 / 99.0, 1e-12));
    }

    #[test]
    fn groups_and_sorts() {
        let quotes = [
            OptionQuote::new(1.0, 120.0, 1.0),
            OptionQuote::new(0.5, 100.0, 3.0),
            OptionQuote::new(1.0, 90.0, 12.0),
            OptionQuote::new(1.0, 100.0, 6.0),
        ];
        let curves = [
            CurvePoint::new(1.0, 1.0, 100.0),
            CurvePoint::new(0.5, 1.0, 100.0),
        ];
        let s = normalize_surface(&quotes, &curves).unwrap();
        assert_eq!(s.n_expiries(), 2);
        assert_eq!(s.slice(0).expiry, 0.5);
        assert_eq!(s.n_vars(), 4);
        let src: Vec<usize> = (0..4).map(|v| s.source_of(v)).collect();
        assert_eq!(src, vec![1, 2, 3, 0]);
        for slice in s.slices() {
            assert!(slice.nodes()[0].is_augmented());
            assert!(slice.nodes().windows(2).all(|w| w[0].strike < w[1].strike));
        }
    }

    #[test]
    fn fx_scale_grid_has_117_nodes() {
        let mut quotes = Vec::new();
        let mut curves = Vec::new();
        for i in 0..13 {
            let t = 0.05 * (i + 1) as f64;
            curves.push(CurvePoint::new(t, 0.99, 1.1));
            for j in 0..9 {
                quotes.push(OptionQuote::new(t, 0.9 + 0.05 * j as f64, 0.01));
            }
        }
        let s = normalize_surface(&quotes, &curves).unwrap();
        assert_eq!(s.n_vars(), 117);
        assert_eq!(s.n_expiries(), 13);
    }

    #[test]
    fn missing_curve_is_reported() {
        let err = normalize_surface(
            &[OptionQuote::new(1.0, 100.0, 5.0)],
            &[CurvePoint::new(2.0, 1.0, 100.0)],
        )
        .unwrap_err();
        assert_eq!(
            err,
            NormalizeError::MissingCurve {
                quote: 0,
                expiry: 1.0
            }
        );
    }

    #[test]
    fn duplicate_strike_is_rejected_with_indices() {
        let quotes = [
            OptionQuote::new(1.0, 100.0, 5.0),
            OptionQuote::new(1.0, 110.0, 2.0),
            OptionQuote::new(1.0, 100.0 * (1.0 + 1e-13), 5.1),
        ];
        let err = normalize_surface(&quotes, &[CurvePoint::new(1.0, 1.0, 100.0)]).unwrap_err();
        assert!(matches!(
            err,
            NormalizeError::DuplicateStrike {
                first: 0,
                second: 2,
                ..
            }
        ));
    }

    #[test]
    fn out_of_domain_inputs() {
        let c = [CurvePoint::new(1.0, 1.0, 100.0)];
        for q in [
            OptionQuote::new(0.0, 100.0, 1.0),
            OptionQuote::new(1.0, -1.0, 1.0),
            OptionQuote::new(1.0, 100.0, -0.5),
            OptionQuote::new(1.0, 100.0, f64::NAN),
        ] {
            let err = normalize_surface(&[q], &c).unwrap_err();
            assert!(
                matches!(err, NormalizeError::NonPositiveInput { .. }),
                "{q:?}"
            );
        }
        let q = [OptionQuote::new(1.0, 100.0, 1.0)];
        for cp in [
            CurvePoint::new(1.0, 0.0, 100.0),
            CurvePoint::new(1.0, 1.2, 100.0),
            CurvePoint::new(1.0, 0.9, 0.0),
        ] {
            let err = normalize_surface(&q, &[cp]).unwrap_err();
            assert!(
                matches!(err, NormalizeError::NonPositiveInput { .. }),
                "{cp:?}"
            );
        }
        assert_eq!(
            normalize_surface(&[], &c).unwrap_err(),
            NormalizeError::EmptyQuotes
        );
    }

    #[test]
    fn crossed_quote_is_rejected() {
        let q = OptionQuote::new(1.0, 100.0, 5.0).with_bid_ask(5.1, 5.5);
        let err = normalize_surface(&[q], &[CurvePoint::new(1.0, 1.0, 100.0)]).unwrap_err();
        assert!(matches!(err, NormalizeError::CrossedQuote { quote: 0, .. }));
    }

    #[test]
    fn degenerate_spreads_get_floor() {
        let q = OptionQuote::new(1.0, 100.0, 5.0).with_bid_ask(5.0, 5.0);
        let s = normalize_surface(&[q], &[CurvePoint::new(1.0, 1.0, 100.0)]).unwrap();
        assert_eq!(s.ask_spreads(), vec![SPREAD_FLOOR]);
        assert_eq!(s.bid_spreads(), vec![SPREAD_FLOOR]);
    }

    #[test]
    fn denormalize_examples() {
        let s = normalize_surface(
            &[OptionQuote::new(1.0, 100.0, 5.0)],
            &[CurvePoint::new(1.0, 1.0, 100.0)],
        )
        .unwrap();
        assert_eq!(denormalize_prices(&s, &[0.05]).unwrap(), vec![(0, 5.0)]);

        let q = OptionQuote::new(0.5, 110.0, 2.0);
        let s = normalize_surface(&[q], &[CurvePoint::new(0.5, 0.99, 100.0)]).unwrap();
        let out = denormalize_prices(&s, &[2.0 / 99.0]).unwrap();
        assert!(close(out[0].1, 2.0, 1e-12));

        assert_eq!(
            denormalize_prices(&s, &[0.1, 0.2]).unwrap_err(),
            NormalizeError::DimensionMismatch {
                expected: 1,
                got: 2
            }
        );
    }

    #[test]
    fn with_prices_checks_length() {
        let s = normalize_surface(
            &[OptionQuote::new(1.0, 100.0, 5.0)],
            &[CurvePoint::new(1.0, 1.0, 100.0)],
        )
        .unwrap();
        assert!(s.with_prices(&[]).is_err());
        assert_eq!(s.with_prices(&[0.2]).unwrap().prices(), vec![0.2]);
    }
}
