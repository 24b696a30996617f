//! Black-Scholes quote generators for tests, benchmarks and stress runs.

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::normalize::{
    normalize_surface, CurvePoint, NormalizeError, NormalizedSurface, OptionQuote,
};

/// Benchmark tenors in years: 1D, 1W, 2W, 3W, 1M, 2M, 3M, 4M, 6M, 9M, 1Y, 18M, 2Y.
pub const FX_TENORS: [f64; 13] = [
    1.0 / 365.0,
    7.0 / 365.0,
    14.0 / 365.0,
    21.0 / 365.0,
    1.0 / 12.0,
    2.0 / 12.0,
    3.0 / 12.0,
    4.0 / 12.0,
    0.5,
    0.75,
    1.0,
    1.5,
    2.0,
];

/// Forward call deltas of the quoted strikes, ITM to OTM (0.5 is ATM).
pub const FX_DELTAS: [f64; 9] = [0.90, 0.85, 0.75, 0.65, 0.50, 0.35, 0.25, 0.15, 0.10];

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal is valid")
}

/// Normalized Black-Scholes call `N(d1) - k N(d2)` for total volatility `s = sigma sqrt(T)`.
pub fn bs_normalized_call(k: f64, s: f64) -> f64 {
    let nd = std_normal();
    if k <= 0.0 {
        return 1.0;
    }
    if s <= 0.0 {
        return (1.0 - k).max(0.0);
    }
    let d1 = (-k.ln() + 0.5 * s * s) / s;
    nd.cdf(d1) - k * nd.cdf(d1 - s)
}

/// Strike in moneyness `K/F` with forward call delta `delta`.
pub fn strike_from_delta(delta: f64, s: f64) -> f64 {
    let d1 = std_normal().inverse_cdf(delta);
    (-d1 * s + 0.5 * s * s).exp()
}

/// Raw quotes with their curves.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSurface {
    pub quotes: Vec<OptionQuote>,
    pub curves: Vec<CurvePoint>,
}

impl SyntheticSurface {
    pub fn normalize(&self) -> Result<NormalizedSurface, NormalizeError> {
        normalize_surface(&self.quotes, &self.curves)
    }
}

/// Market parameters shared by the generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Market {
    pub spot: f64,
    pub rate: f64,
    pub carry: f64,
    pub vol: f64,
    /// Half-spread in volatility points at the money.
    pub vol_spread: f64,
}

impl Market {
    pub fn with_vol(vol: f64) -> Self {
        Self {
            spot: 100.0,
            rate: 0.02,
            carry: 0.01,
            vol,
            vol_spread: 0.005,
        }
    }

    pub fn curve(&self, t: f64) -> CurvePoint {
        CurvePoint::new(
            t,
            (-self.rate * t).exp(),
            self.spot * ((self.rate - self.carry) * t).exp(),
        )
    }

    /// Quote at moneyness `k` with bid and ask priced at shifted volatilities.
    /// The spread widens away from the money by `1 + |ln k| / s`.
    pub fn quote(&self, t: f64, k: f64, skew: (f64, f64)) -> OptionQuote {
        let curve = self.curve(t);
        let scale = curve.discount * curve.forward;
        let root_t = t.sqrt();
        let s = self.vol * root_t;
        let wing = 1.0 + k.ln().abs() / s;
        let hb = (self.vol_spread * wing * skew.0).min(0.9 * self.vol);
        let ha = self.vol_spread * wing * skew.1;
        let mid = bs_normalized_call(k, s) * scale;
        let bid = bs_normalized_call(k, (self.vol - hb) * root_t) * scale;
        let ask = bs_normalized_call(k, (self.vol + ha) * root_t) * scale;
        OptionQuote::new(t, k * curve.forward, mid).with_bid_ask(bid.min(mid), ask.max(mid))
    }
}

/// The 13 tenor by 9 delta grid (N = 117) at flat volatility `vol`.
pub fn fx_surface(vol: f64) -> SyntheticSurface {
    let market = Market::with_vol(vol);
    let mut quotes = Vec::new();
    let mut curves = Vec::new();
    for &t in &FX_TENORS {
        curves.push(market.curve(t));
        let s = vol * t.sqrt();
        for &d in &FX_DELTAS {
            quotes.push(market.quote(t, strike_from_delta(d, s), (1.0, 1.0)));
        }
    }
    SyntheticSurface { quotes, curves }
}

/// Same grid with spread multipliers drawn per quote from `[0.3, 3]`.
pub fn fx_surface_heterogeneous<R: Rng>(vol: f64, rng: &mut R) -> SyntheticSurface {
    let market = Market::with_vol(vol);
    let mut quotes = Vec::new();
    let mut curves = Vec::new();
    for &t in &FX_TENORS {
        curves.push(market.curve(t));
        let s = vol * t.sqrt();
        for &d in &FX_DELTAS {
            let skew = (rng.gen_range(0.3..3.0), rng.gen_range(0.3..3.0));
            quotes.push(market.quote(t, strike_from_delta(d, s), skew));
        }
    }
    SyntheticSurface { quotes, curves }
}

/// Listed-style surface: `n_expiries` monthly expiries, `per_expiry` strikes
/// each, spanning roughly three standard deviations on a shifted grid so that
/// strikes interleave across expiries.
pub fn listed_surface(vol: f64, n_expiries: usize, per_expiry: usize) -> SyntheticSurface {
    let market = Market::with_vol(vol);
    let mut quotes = Vec::new();
    let mut curves = Vec::new();
    for i in 0..n_expiries {
        let t = (i + 1) as f64 / 12.0;
        curves.push(market.curve(t));
        let s = vol * t.sqrt();
        let width = 3.0 * s;
        for j in 0..per_expiry {
            let shift = (0.37 * i as f64) % 1.0;
            let u = (j as f64 + 0.5 * shift + 0.25) / per_expiry as f64;
            let k = (width * (2.0 * u - 1.0)).exp();
            quotes.push(market.quote(t, k, (1.0, 1.0)));
        }
    }
    SyntheticSurface { quotes, curves }
}

/// Random grid with `F = D = 1`, up to `max_expiries` expiries and up to
/// `max_strikes` strikes each, drawn from the lattice `0.05, 0.10, ..., 2.00`.
/// Prices are Black-Scholes at a random per-expiry volatility, then each
/// multiplied by `exp(noise * u)` with `u` uniform on `[-1, 1]`.
pub fn random_lattice_surface<R: Rng>(
    rng: &mut R,
    max_expiries: usize,
    max_strikes: usize,
    noise: f64,
) -> SyntheticSurface {
    let m = rng.gen_range(1..=max_expiries);
    let mut quotes = Vec::new();
    let mut curves = Vec::new();
    let mut t = 0.0;
    for _ in 0..m {
        t += rng.gen_range(0.05..0.5);
        curves.push(CurvePoint::new(t, 1.0, 1.0));
        let n = rng.gen_range(1..=max_strikes);
        let picks = rand::seq::index::sample(rng, 40, n);
        let vol = rng.gen_range(0.1..0.6);
        for slot in picks.iter() {
            let k = 0.05 * (slot + 1) as f64;
            let clean = bs_normalized_call(k, vol * f64::sqrt(t));
            let c = clean * (noise * rng.gen_range(-1.0..1.0)).exp();
            quotes.push(OptionQuote::new(t, k, c));
        }
    }
    SyntheticSurface { quotes, curves }
}
