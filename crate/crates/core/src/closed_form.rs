//! Closed-form diversity-multiplexing tradeoff of Rayleigh-product and
//! double-scattering channels, and the single-scattering Rayleigh reference.
//!
//! Everything here is exact integer or rational arithmetic.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Rational;

/// Antenna/scatterer counts of a double-scattering channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelTriple {
    pub n_t: u32,
    pub n_s: u32,
    pub n_r: u32,
}

impl ChannelTriple {
    pub fn new(n_t: u32, n_s: u32, n_r: u32) -> Result<Self> {
        if n_t == 0 || n_s == 0 || n_r == 0 {
            return Err(Error::InvalidInput(format!(
                "triple components must be >= 1, got ({n_t},{n_s},{n_r})"
            )));
        }
        Ok(Self { n_t, n_s, n_r })
    }

    pub fn as_array(&self) -> [u32; 3] {
        [self.n_t, self.n_s, self.n_r]
    }

    /// All six role permutations, including the identity.
    pub fn permutations(&self) -> [ChannelTriple; 6] {
        let [a, b, c] = self.as_array();
        [
            Self { n_t: a, n_s: b, n_r: c },
            Self { n_t: a, n_s: c, n_r: b },
            Self { n_t: b, n_s: a, n_r: c },
            Self { n_t: b, n_s: c, n_r: a },
            Self { n_t: c, n_s: a, n_r: b },
            Self { n_t: c, n_s: b, n_r: a },
        ]
    }
}

impl fmt::Display for ChannelTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.n_t, self.n_s, self.n_r)
    }
}

impl std::str::FromStr for ChannelTriple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "expected T,S,R with three comma-separated integers, got '{s}'"
            )));
        }
        let mut v = [0u32; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::InvalidInput(format!("'{p}' is not a positive integer")))?;
        }
        Self::new(v[0], v[1], v[2])
    }
}

/// Which physical node a sorted dimension came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Transmit,
    Scatter,
    Receive,
}

/// Sorted form `M <= N <= L` of a triple, with `delta = L - N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedTriple {
    pub m_small: u32,
    pub n_mid: u32,
    pub l_large: u32,
    pub delta: u32,
    /// Source role of `M`, `N`, `L` respectively (stable sort).
    pub roles: [Role; 3],
}

impl OrderedTriple {
    /// Builds an ordered triple directly from three sorted-or-not values.
    pub fn from_dims(a: u32, b: u32, c: u32) -> Result<Self> {
        Ok(order_triple(ChannelTriple::new(a, b, c)?))
    }
}

pub fn order_triple(t: ChannelTriple) -> OrderedTriple {
    let mut tagged = [
        (t.n_t, Role::Transmit),
        (t.n_s, Role::Scatter),
        (t.n_r, Role::Receive),
    ];
    tagged.sort_by_key(|&(v, _)| v);
    let [(m, rm), (n, rn), (l, rl)] = tagged;
    OrderedTriple {
        m_small: m,
        n_mid: n,
        l_large: l,
        delta: l - n,
        roles: [rm, rn, rl],
    }
}

/// `d(k) = (M-k)(N-k) - floor(((M-Δ-k)^+)^2 / 4)`.
pub fn dmt_point(o: &OrderedTriple, k: u32) -> Result<i64> {
    if k > o.m_small {
        return Err(Error::Domain(format!(
            "multiplexing gain k={k} outside 0..={}",
            o.m_small
        )));
    }
    let (m, n, delta, k) = (
        o.m_small as i64,
        o.n_mid as i64,
        o.delta as i64,
        k as i64,
    );
    let excess = (m - delta - k).max(0);
    Ok((m - k) * (n - k) - excess * excess / 4)
}

/// Piecewise-linear tradeoff curve through integer points `(k, d(k))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DmtCurve {
    pub points: Vec<(u32, i64)>,
}

impl DmtCurve {
    /// Largest multiplexing gain `M`.
    pub fn max_gain(&self) -> u32 {
        self.points.last().map(|p| p.0).unwrap_or(0)
    }

    pub fn value_at(&self, k: u32) -> Option<i64> {
        self.points.get(k as usize).map(|p| p.1)
    }

    /// Checks the shape invariants: non-increasing, ends at zero, convex.
    pub fn check_shape(&self) -> Result<()> {
        let d: Vec<i64> = self.points.iter().map(|p| p.1).collect();
        if d.last() != Some(&0) {
            return Err(Error::Internal("curve does not end at d(M) = 0".into()));
        }
        if d.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Internal("curve is not non-increasing".into()));
        }
        // slopes d(k+1)-d(k) must be non-decreasing (convex, decreasing curve)
        if d.windows(3).any(|w| w[2] - w[1] < w[1] - w[0]) {
            return Err(Error::Internal("curve is not convex".into()));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,d\n");
        for (k, d) in &self.points {
            out.push_str(&format!("{k},{d}\n"));
        }
        out
    }
}

pub fn dmt_curve(t: ChannelTriple) -> DmtCurve {
    let o = order_triple(t);
    let points = (0..=o.m_small)
        .map(|k| (k, dmt_point(&o, k).expect("k within 0..=M")))
        .collect();
    DmtCurve { points }
}

/// Exact linear interpolation of the curve at a rational multiplexing gain.
pub fn dmt_at(c: &DmtCurve, r: &Rational) -> Result<Rational> {
    let max = Rational::from_integer(BigInt::from(c.max_gain()));
    if r.is_negative() || *r > max {
        return Err(Error::Domain(format!("r={r} outside [0, {max}]")));
    }
    let lo = r.floor();
    let k = lo.to_integer().to_u32().expect("bounded by M");
    let frac = r - &lo;
    let d_lo = Rational::from_integer(BigInt::from(c.value_at(k).expect("k <= M")));
    if frac.is_zero() {
        return Ok(d_lo);
    }
    let d_hi = Rational::from_integer(BigInt::from(c.value_at(k + 1).expect("k < M")));
    Ok(&d_lo * (Rational::one() - &frac) + d_hi * frac)
}

/// Rayleigh `m x n` tradeoff point `(m-k)(n-k)`.
pub fn rayleigh_dmt(m: u32, n: u32, k: u32) -> Result<i64> {
    if k > m.min(n) {
        return Err(Error::Domain(format!(
            "k={k} outside 0..={} for a {m}x{n} Rayleigh channel",
            m.min(n)
        )));
    }
    Ok((m as i64 - k as i64) * (n as i64 - k as i64))
}

/// `true` iff `L + 1 >= M + N`, equivalently `2 max + 1 >= n_T + n_S + n_R`.
pub fn is_rayleigh_equivalent(t: ChannelTriple) -> bool {
    let o = order_triple(t);
    o.l_large + 1 >= o.m_small + o.n_mid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxDiversity {
    /// `d(0)`.
    pub value: i64,
    /// `n_T n_S n_R / max(n_T, n_S, n_R) = M N`.
    pub upper_bound: i64,
    pub bound_attained: bool,
}

pub fn max_diversity(t: ChannelTriple) -> MaxDiversity {
    let o = order_triple(t);
    let value = dmt_point(&o, 0).expect("k=0 always valid");
    let upper_bound = o.m_small as i64 * o.n_mid as i64;
    MaxDiversity {
        value,
        upper_bound,
        bound_attained: value == upper_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: u32, b: u32, c: u32) -> ChannelTriple {
        ChannelTriple::new(a, b, c).unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn ordering_examples() {
        let o = order_triple(t(3, 2, 4));
        assert_eq!((o.m_small, o.n_mid, o.l_large, o.delta), (2, 3, 4, 1));
        assert_eq!(o.roles, [Role::Scatter, Role::Transmit, Role::Receive]);
        let o = order_triple(t(2, 2, 2));
        assert_eq!((o.m_small, o.n_mid, o.l_large, o.delta), (2, 2, 2, 0));
        assert_eq!(o.roles, [Role::Transmit, Role::Scatter, Role::Receive]);
        let o = order_triple(t(1, 5, 3));
        assert_eq!((o.m_small, o.n_mid, o.l_large, o.delta), (1, 3, 5, 2));
    }

    #[test]
    fn zero_component_rejected() {
        assert!(ChannelTriple::new(0, 1, 1).is_err());
        assert!("0,1,1".parse::<ChannelTriple>().is_err());
        assert!("1,2".parse::<ChannelTriple>().is_err());
        assert_eq!("2, 3,4".parse::<ChannelTriple>().unwrap(), t(2, 3, 4));
    }

    #[test]
    fn point_values() {
        let o = order_triple(t(2, 2, 2));
        assert_eq!(dmt_point(&o, 0).unwrap(), 3);
        assert_eq!(dmt_point(&o, 2).unwrap(), 0);
        assert!(matches!(dmt_point(&o, 3), Err(Error::Domain(_))));
        assert_eq!(dmt_point(&order_triple(t(2, 3, 4)), 0).unwrap(), 6);
    }

    #[test]
    fn curve_examples() {
        assert_eq!(dmt_curve(t(2, 2, 2)).points, vec![(0, 3), (1, 1), (2, 0)]);
        for n in 1..=6 {
            assert_eq!(dmt_curve(t(1, n, n)).points, vec![(0, n as i64), (1, 0)]);
        }
        assert_eq!(dmt_curve(t(2, 3, 4)).points, vec![(0, 6), (1, 2), (2, 0)]);
    }

    #[test]
    fn interpolation() {
        let c = dmt_curve(t(2, 2, 2));
        assert_eq!(dmt_at(&c, &q(1, 2)).unwrap(), q(2, 1));
        assert_eq!(dmt_at(&c, &q(2, 1)).unwrap(), q(0, 1));
        assert_eq!(dmt_at(&c, &q(1, 1)).unwrap(), q(1, 1));
        assert_eq!(dmt_at(&c, &q(7, 4)).unwrap(), q(1, 4));
        assert!(dmt_at(&c, &q(-1, 4)).is_err());
        assert!(dmt_at(&c, &q(9, 4)).is_err());
    }

    #[test]
    fn rayleigh_reference() {
        assert_eq!(rayleigh_dmt(2, 3, 0).unwrap(), 6);
        assert_eq!(rayleigh_dmt(2, 3, 2).unwrap(), 0);
        assert_eq!(rayleigh_dmt(4, 4, 2).unwrap(), 4);
        assert!(rayleigh_dmt(2, 3, 3).is_err());
    }

    #[test]
    fn equivalence_and_max_diversity() {
        assert!(is_rayleigh_equivalent(t(2, 3, 4)));
        assert!(!is_rayleigh_equivalent(t(2, 2, 2)));
        for n in 1..=6 {
            for l in 1..=6 {
                assert!(is_rayleigh_equivalent(t(1, n, l)));
            }
        }
        assert_eq!(
            max_diversity(t(2, 3, 4)),
            MaxDiversity { value: 6, upper_bound: 6, bound_attained: true }
        );
        assert_eq!(
            max_diversity(t(2, 2, 2)),
            MaxDiversity { value: 3, upper_bound: 4, bound_attained: false }
        );
        assert!(max_diversity(t(1, 1, 1)).bound_attained);
    }

    #[test]
    fn shape_holds_for_small_triples() {
        for a in 1..=6 {
            for b in 1..=6 {
                for c in 1..=6 {
                    dmt_curve(t(a, b, c)).check_shape().unwrap();
                }
            }
        }
    }

    #[test]
    fn csv_rendering() {
        assert_eq!(dmt_curve(t(1, 4, 4)).to_csv(), "k,d\n0,4\n1,0\n");
    }
}
