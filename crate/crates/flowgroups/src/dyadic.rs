//! Exact dyadic rationals and dyadic piecewise-linear homeomorphisms of
//! closed intervals, including the Thompson generators of `F_J` and the
//! interval lemmas used by the constructions.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A rational number `num / 2^exp`, kept in canonical form (odd numerator
/// or zero exponent).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: i128,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    pub fn new(num: i128, exp: u32) -> Dyadic {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    pub fn int(n: i64) -> Dyadic {
        Dyadic { num: n as i128, exp: 0 }
    }

    /// `2^k` for any integer `k`.
    pub fn pow2(k: i32) -> Dyadic {
        if k >= 0 {
            Dyadic { num: 1i128 << k, exp: 0 }
        } else {
            Dyadic { num: 1, exp: (-k) as u32 }
        }
    }

    pub fn numerator(&self) -> i128 {
        self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    fn normalize(&mut self) {
        if self.num == 0 {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().min(self.exp);
        self.num >>= tz;
        self.exp -= tz;
    }

    fn align(a: Dyadic, b: Dyadic) -> (i128, i128, u32) {
        let e = a.exp.max(b.exp);
        let na = a
            .num
            .checked_mul(1i128 << (e - a.exp))
            .expect("dyadic overflow");
        let nb = b
            .num
            .checked_mul(1i128 << (e - b.exp))
            .expect("dyadic overflow");
        (na, nb, e)
    }

    /// Multiplies by `2^k`.
    pub fn mul_pow2(self, k: i32) -> Dyadic {
        if self.num == 0 {
            return self;
        }
        if k >= 0 {
            let k = k as u32;
            if k <= self.exp {
                Dyadic { num: self.num, exp: self.exp - k }
            } else {
                let shift = k - self.exp;
                assert!(shift < 126, "dyadic overflow");
                let num = self.num.checked_mul(1i128 << shift).expect("dyadic overflow");
                Dyadic { num, exp: 0 }
            }
        } else {
            Dyadic::new(self.num, self.exp + (-k) as u32)
        }
    }

    pub fn half(self) -> Dyadic {
        self.mul_pow2(-1)
    }

    pub fn mid(a: Dyadic, b: Dyadic) -> Dyadic {
        (a + b).half()
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_integer(&self) -> bool {
        self.exp == 0
    }

    pub fn abs(self) -> Dyadic {
        Dyadic { num: self.num.abs(), exp: self.exp }
    }

    pub fn floor(self) -> i64 {
        (self.num >> self.exp) as i64
    }

    pub fn ceil(self) -> i64 {
        let f = self.floor();
        if Dyadic::int(f) == self {
            f
        } else {
            f + 1
        }
    }

    pub fn max(self, other: Dyadic) -> Dyadic {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Dyadic) -> Dyadic {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Writes a nonzero value as `odd * 2^k`.
    fn odd_part(self) -> (i128, i32) {
        let tz = self.num.trailing_zeros();
        (self.num >> tz, tz as i32 - self.exp as i32)
    }

    /// Returns `k` when `self / other = 2^k`.
    pub fn log2_ratio(self, other: Dyadic) -> Option<i32> {
        if self.num == 0 || other.num == 0 {
            return None;
        }
        let (oa, ka) = self.odd_part();
        let (ob, kb) = other.odd_part();
        (oa == ob).then_some(ka - kb)
    }

    /// Writes a positive value as a sum of distinct powers of two, largest first.
    pub fn binary_terms(self) -> Vec<i32> {
        assert!(self.num > 0);
        let mut out = Vec::new();
        let mut n = self.num;
        let mut bit = 0i32;
        while n > 0 {
            if n & 1 == 1 {
                out.push(bit - self.exp as i32);
            }
            n >>= 1;
            bit += 1;
        }
        out.reverse();
        out
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / 2f64.powi(self.exp as i32)
    }

    /// Decimal rendering with twelve digits after the point.
    pub fn decimal(self) -> String {
        format!("{:.12}", self.to_f64())
    }
}

impl Default for Dyadic {
    fn default() -> Self {
        Dyadic::ZERO
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = Dyadic::align(*self, *other);
        a.cmp(&b)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = Dyadic::align(self, rhs);
        Dyadic::new(a.checked_add(b).expect("dyadic overflow"), e)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        self + (-rhs)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { num: -self.num, exp: self.exp }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Dyadic) -> Dyadic {
        let num = self.num.checked_mul(rhs.num).expect("dyadic overflow");
        Dyadic::new(num, self.exp + rhs.exp)
    }
}

impl From<i64> for Dyadic {
    fn from(n: i64) -> Self {
        Dyadic::int(n)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, 1i128 << self.exp)
        }
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `p/2^q`, `p/m` with `m` a power of two, or an integer.
    fn from_str(s: &str) -> Result<Dyadic> {
        let bad = || Error::Input(format!("not a dyadic rational: {s:?}"));
        let s = s.trim();
        match s.split_once('/') {
            None => s.parse::<i128>().map(|n| Dyadic::new(n, 0)).map_err(|_| bad()),
            Some((p, q)) => {
                let num = p.trim().parse::<i128>().map_err(|_| bad())?;
                let q = q.trim();
                let exp = if let Some(e) = q.strip_prefix("2^") {
                    e.parse::<u32>().map_err(|_| bad())?
                } else {
                    let m = q.parse::<u128>().map_err(|_| bad())?;
                    if m == 0 || !m.is_power_of_two() {
                        return Err(bad());
                    }
                    m.trailing_zeros()
                };
                if exp > 120 {
                    return Err(bad());
                }
                Ok(Dyadic::new(num, exp))
            }
        }
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Dyadic, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for `num / den` where `den` is a power of two.
pub fn dy(num: i64, den: i64) -> Dyadic {
    assert!(den > 0 && (den as u64).is_power_of_two(), "denominator must be a power of two");
    Dyadic::new(num as i128, den.trailing_zeros())
}

/// An increasing piecewise-linear homeomorphism `[t_0, t_k] -> [v_0, v_k]`
/// with dyadic breakpoints and values and power-of-two slopes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PLMap {
    bp: Vec<Dyadic>,
    val: Vec<Dyadic>,
    exps: Vec<i32>,
}

impl fmt::Debug for PLMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PLMap[")?;
        for (i, (t, v)) in self.bp.iter().zip(&self.val).enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t:?}->{v:?}")?;
        }
        f.write_str("]")
    }
}

impl PLMap {
    /// Builds a map from its breakpoint/value table, checking monotonicity
    /// and power-of-two slopes, and merges removable breakpoints.
    pub fn new(bp: Vec<Dyadic>, val: Vec<Dyadic>) -> Result<PLMap> {
        if bp.len() < 2 || bp.len() != val.len() {
            return Err(Error::Input("a PL map needs at least two breakpoint/value pairs".into()));
        }
        let mut exps = Vec::with_capacity(bp.len() - 1);
        for i in 0..bp.len() - 1 {
            let dt = bp[i + 1] - bp[i];
            let dv = val[i + 1] - val[i];
            if dt <= Dyadic::ZERO || dv <= Dyadic::ZERO {
                return Err(Error::Input(format!(
                    "PL map is not strictly increasing near breakpoint {}",
                    bp[i]
                )));
            }
            match dv.log2_ratio(dt) {
                Some(k) => exps.push(k),
                None => {
                    return Err(Error::NonDyadic(format!(
                        "slope {:?}/{:?} on [{}, {}] is not a power of two",
                        dv,
                        dt,
                        bp[i],
                        bp[i + 1]
                    )))
                }
            }
        }
        let mut m = PLMap { bp, val, exps };
        m.merge();
        Ok(m)
    }

    /// Validity predicate for a table that may carry slopes which are not powers of two.
    pub fn is_dyadic_table(bp: &[Dyadic], val: &[Dyadic]) -> bool {
        bp.len() >= 2
            && bp.len() == val.len()
            && (0..bp.len() - 1).all(|i| {
                let dt = bp[i + 1] - bp[i];
                let dv = val[i + 1] - val[i];
                dt > Dyadic::ZERO && dv > Dyadic::ZERO && dv.log2_ratio(dt).is_some()
            })
    }

    pub fn from_pairs(pairs: &[(Dyadic, Dyadic)]) -> Result<PLMap> {
        PLMap::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    pub fn identity(u: Dyadic, v: Dyadic) -> PLMap {
        assert!(u < v);
        PLMap { bp: vec![u, v], val: vec![u, v], exps: vec![0] }
    }

    /// The affine map `[u, v] -> [a, b]`; the length ratio must be a power of two.
    pub fn affine(u: Dyadic, v: Dyadic, a: Dyadic, b: Dyadic) -> Result<PLMap> {
        PLMap::new(vec![u, v], vec![a, b])
    }

    /// `t -> t + c` on `[u, v]`.
    pub fn translation(u: Dyadic, v: Dyadic, c: Dyadic) -> PLMap {
        PLMap { bp: vec![u, v], val: vec![u + c, v + c], exps: vec![0] }
    }

    fn merge(&mut self) {
        let mut bp = vec![self.bp[0]];
        let mut val = vec![self.val[0]];
        let mut exps: Vec<i32> = Vec::new();
        for i in 0..self.exps.len() {
            if let Some(&last) = exps.last() {
                if last == self.exps[i] {
                    *bp.last_mut().unwrap() = self.bp[i + 1];
                    *val.last_mut().unwrap() = self.val[i + 1];
                    continue;
                }
            }
            exps.push(self.exps[i]);
            bp.push(self.bp[i + 1]);
            val.push(self.val[i + 1]);
        }
        self.bp = bp;
        self.val = val;
        self.exps = exps;
    }

    pub fn breakpoints(&self) -> &[Dyadic] {
        &self.bp
    }

    pub fn values(&self) -> &[Dyadic] {
        &self.val
    }

    /// Slope exponents, one per piece.
    pub fn slope_exponents(&self) -> &[i32] {
        &self.exps
    }

    pub fn pairs(&self) -> Vec<(Dyadic, Dyadic)> {
        self.bp.iter().copied().zip(self.val.iter().copied()).collect()
    }

    pub fn domain(&self) -> (Dyadic, Dyadic) {
        (self.bp[0], *self.bp.last().unwrap())
    }

    pub fn image(&self) -> (Dyadic, Dyadic) {
        (self.val[0], *self.val.last().unwrap())
    }

    fn piece_of(bp: &[Dyadic], t: Dyadic) -> usize {
        match bp.binary_search(&t) {
            Ok(i) => i.min(bp.len() - 2),
            Err(i) => i - 1,
        }
    }

    pub fn eval(&self, t: Dyadic) -> Dyadic {
        let (u, v) = self.domain();
        assert!(t >= u && t <= v, "evaluation at {t} outside [{u}, {v}]");
        let i = PLMap::piece_of(&self.bp, t);
        self.val[i] + (t - self.bp[i]).mul_pow2(self.exps[i])
    }

    pub fn eval_inverse(&self, s: Dyadic) -> Dyadic {
        let (a, b) = self.image();
        assert!(s >= a && s <= b, "inverse evaluation at {s} outside [{a}, {b}]");
        let i = PLMap::piece_of(&self.val, s);
        self.bp[i] + (s - self.val[i]).mul_pow2(-self.exps[i])
    }

    pub fn is_identity(&self) -> bool {
        self.bp == self.val
    }

    pub fn inverse(&self) -> PLMap {
        PLMap {
            bp: self.val.clone(),
            val: self.bp.clone(),
            exps: self.exps.iter().map(|e| -e).collect(),
        }
    }

    /// `self ∘ inner`; the image of `inner` must equal the domain of `self`.
    pub fn compose(&self, inner: &PLMap) -> Result<PLMap> {
        if inner.image() != self.domain() {
            return Err(Error::DomainMismatch(format!(
                "image [{}, {}] does not match domain [{}, {}]",
                inner.image().0,
                inner.image().1,
                self.domain().0,
                self.domain().1
            )));
        }
        let mut ts: Vec<Dyadic> = inner.bp.clone();
        for &s in &self.bp {
            ts.push(inner.eval_inverse(s));
        }
        ts.sort();
        ts.dedup();
        let vals = ts.iter().map(|&t| self.eval(inner.eval(t))).collect();
        PLMap::new(ts, vals)
    }

    /// Restriction to `[lo, hi]` inside the domain.
    pub fn restrict(&self, lo: Dyadic, hi: Dyadic) -> PLMap {
        let (u, v) = self.domain();
        assert!(u <= lo && lo < hi && hi <= v, "restriction outside the domain");
        let mut ts = vec![lo];
        ts.extend(self.bp.iter().copied().filter(|&t| t > lo && t < hi));
        ts.push(hi);
        let vals = ts.iter().map(|&t| self.eval(t)).collect();
        PLMap::new(ts, vals).expect("restriction of a PL map")
    }

    /// `t -> self(t - dt) + dv` on the translated domain.
    pub fn shifted(&self, dt: Dyadic, dv: Dyadic) -> PLMap {
        PLMap {
            bp: self.bp.iter().map(|&t| t + dt).collect(),
            val: self.val.iter().map(|&v| v + dv).collect(),
            exps: self.exps.clone(),
        }
    }

    /// Joins maps on consecutive domains into one map; values must be continuous.
    pub fn concat(parts: &[PLMap]) -> Result<PLMap> {
        let mut bp = parts[0].bp.clone();
        let mut val = parts[0].val.clone();
        for w in parts.windows(2) {
            if w[0].domain().1 != w[1].domain().0 || w[0].image().1 != w[1].image().0 {
                return Err(Error::DomainMismatch("pieces do not join continuously".into()));
            }
        }
        for p in &parts[1..] {
            bp.extend_from_slice(&p.bp[1..]);
            val.extend_from_slice(&p.val[1..]);
        }
        PLMap::new(bp, val)
    }

    /// Extends a map fixing the endpoints of its domain by the identity to `[u, v]`.
    pub fn extend_identity(&self, u: Dyadic, v: Dyadic) -> Result<PLMap> {
        let (a, b) = self.domain();
        if self.image() != (a, b) || u > a || v < b {
            return Err(Error::DomainMismatch(
                "identity extension needs a map fixing its endpoints inside the new domain".into(),
            ));
        }
        let mut parts = Vec::new();
        if u < a {
            parts.push(PLMap::identity(u, a));
        }
        parts.push(self.clone());
        if b < v {
            parts.push(PLMap::identity(b, v));
        }
        PLMap::concat(&parts)
    }

    /// Closed components of the support `closure{t : f(t) != t}`.
    pub fn support_components(&self) -> Vec<(Dyadic, Dyadic)> {
        let mut out: Vec<(Dyadic, Dyadic)> = Vec::new();
        for i in 0..self.exps.len() {
            let moved = !(self.exps[i] == 0 && self.bp[i] == self.val[i]);
            if !moved {
                continue;
            }
            let (a, b) = (self.bp[i], self.bp[i + 1]);
            match out.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                _ => out.push((a, b)),
            }
        }
        out
    }

    /// Smallest and largest displacement `f(t) - t`.
    pub fn displacement_range(&self) -> (Dyadic, Dyadic) {
        let mut lo = self.val[0] - self.bp[0];
        let mut hi = lo;
        for (t, v) in self.bp.iter().zip(&self.val) {
            let d = *v - *t;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }

    /// Whether the map is the identity near both endpoints of the open interval `(a, b)`.
    pub fn is_identity_near(&self, a: Dyadic, b: Dyadic) -> bool {
        let left_ok = match self.bp.binary_search(&a) {
            Ok(i) if i < self.exps.len() => self.exps[i] == 0 && self.val[i] == a,
            Ok(_) => false,
            Err(i) => i > 0 && i <= self.exps.len() && {
                let k = i - 1;
                self.exps[k] == 0 && self.eval(a) == a
            },
        };
        let right_ok = match self.bp.binary_search(&b) {
            Ok(i) if i > 0 => self.exps[i - 1] == 0 && self.val[i] == b,
            Ok(_) => false,
            Err(i) => i > 0 && i <= self.exps.len() && {
                let k = i - 1;
                self.exps[k] == 0 && self.eval(b) == b
            },
        };
        left_ok && right_ok
    }
}

impl Serialize for PLMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.pairs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PLMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<PLMap, D::Error> {
        let pairs: Vec<(Dyadic, Dyadic)> = Vec::deserialize(d)?;
        PLMap::from_pairs(&pairs).map_err(serde::de::Error::custom)
    }
}

/// An open interval with dyadic endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

impl Interval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Result<Interval> {
        if lo >= hi {
            return Err(Error::Input(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn len(&self) -> Dyadic {
        self.hi - self.lo
    }

    pub fn contains(&self, t: Dyadic) -> bool {
        self.lo < t && t < self.hi
    }

    /// Whether the closure of `other` lies inside `self`.
    pub fn contains_closure(&self, other: &Interval) -> bool {
        self.lo < other.lo && other.hi < self.hi
    }

    pub fn translate(&self, n: i64) -> Interval {
        Interval { lo: self.lo + Dyadic::int(n), hi: self.hi + Dyadic::int(n) }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.lo, self.hi)
    }
}

/// A dyadic PL homeomorphism `[0, 1] -> [p, q]`; affine when `q - p` is a power of two.
pub fn unit_chart(p: Dyadic, q: Dyadic) -> PLMap {
    let terms = (q - p).binary_terms();
    let r = terms.len();
    let mut bp = vec![Dyadic::ZERO];
    let mut val = vec![p];
    for (i, &e) in terms.iter().enumerate() {
        let piece = if i + 1 < r { Dyadic::pow2(-(i as i32) - 1) } else { Dyadic::pow2(-(r as i32) + 1) };
        let t = *bp.last().unwrap() + piece;
        let v = *val.last().unwrap() + Dyadic::pow2(e);
        bp.push(t);
        val.push(v);
    }
    *bp.last_mut().unwrap() = Dyadic::ONE;
    PLMap::new(bp, val).expect("unit chart")
}

/// A dyadic PL homeomorphism `[u0, v0] -> [u1, v1]`.
pub fn interval_map(u0: Dyadic, v0: Dyadic, u1: Dyadic, v1: Dyadic) -> PLMap {
    if u0 == u1 && v0 == v1 {
        return PLMap::identity(u0, v0);
    }
    if let Ok(m) = PLMap::affine(u0, v0, u1, v1) {
        return m;
    }
    let a = unit_chart(u0, v0);
    let b = unit_chart(u1, v1);
    b.compose(&a.inverse()).expect("interval map")
}

/// The standard generator `A` of `F` on `[0, 1]`.
pub fn standard_a() -> PLMap {
    PLMap::from_pairs(&[
        (Dyadic::ZERO, Dyadic::ZERO),
        (dy(1, 4), dy(1, 2)),
        (dy(1, 2), dy(3, 4)),
        (Dyadic::ONE, Dyadic::ONE),
    ])
    .unwrap()
}

/// The standard generator `B`: the identity on `[0, 1/2]` and a copy of `A` on `[1/2, 1]`.
pub fn standard_b() -> PLMap {
    PLMap::from_pairs(&[
        (Dyadic::ZERO, Dyadic::ZERO),
        (dy(1, 2), dy(1, 2)),
        (dy(5, 8), dy(3, 4)),
        (dy(3, 4), dy(7, 8)),
        (Dyadic::ONE, Dyadic::ONE),
    ])
    .unwrap()
}

/// Conjugates an element of `F` on `[0, 1]` into `F_J` on the closure of `J`.
pub fn transport_to(j: &Interval, f: &PLMap) -> PLMap {
    let psi = unit_chart(j.lo, j.hi);
    psi.compose(f).unwrap().compose(&psi.inverse()).unwrap()
}

/// Conjugates an element of `F_J` on the closure of `J` back to `[0, 1]`.
pub fn transport_from(j: &Interval, f: &PLMap) -> PLMap {
    let psi = unit_chart(j.lo, j.hi);
    psi.inverse().compose(f).unwrap().compose(&psi).unwrap()
}

/// Generators `(A_J, B_J)` of `F_J`, as maps on the closure of `J`.
pub fn thompson_generators(j: &Interval) -> (PLMap, PLMap) {
    (transport_to(j, &standard_a()), transport_to(j, &standard_b()))
}

/// A letter of a word in the Thompson generators: `A`, `B` or their inverses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FLetter {
    A,
    AInv,
    B,
    BInv,
}

impl FLetter {
    pub fn inverse(self) -> FLetter {
        match self {
            FLetter::A => FLetter::AInv,
            FLetter::AInv => FLetter::A,
            FLetter::B => FLetter::BInv,
            FLetter::BInv => FLetter::B,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            FLetter::A => 'a',
            FLetter::AInv => 'A',
            FLetter::B => 'b',
            FLetter::BInv => 'B',
        }
    }
}

pub fn invert_word(w: &[FLetter]) -> Vec<FLetter> {
    w.iter().rev().map(|l| l.inverse()).collect()
}

/// Cancels adjacent inverse pairs.
pub fn reduce_word(w: &[FLetter]) -> Vec<FLetter> {
    let mut out: Vec<FLetter> = Vec::with_capacity(w.len());
    for &l in w {
        if out.last() == Some(&l.inverse()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// Evaluates a word as the composite `w_1 ∘ w_2 ∘ ⋯` of generators on the closure of `J`.
pub fn eval_word(j: &Interval, w: &[FLetter]) -> PLMap {
    let (a, b) = thompson_generators(j);
    let (ai, bi) = (a.inverse(), b.inverse());
    let mut acc = PLMap::identity(j.lo, j.hi);
    for l in w {
        let g = match l {
            FLetter::A => &a,
            FLetter::AInv => &ai,
            FLetter::B => &b,
            FLetter::BInv => &bi,
        };
        acc = acc.compose(g).unwrap();
    }
    acc
}

/// A dyadic rational with an unbounded numerator.
#[derive(Clone, Debug, PartialEq, Eq)]
struct WideDyadic {
    num: BigInt,
    exp: u32,
}

impl WideDyadic {
    fn from(d: Dyadic) -> WideDyadic {
        WideDyadic { num: BigInt::from(d.numerator()), exp: d.exponent() }
    }

    fn normalized(mut num: BigInt, mut exp: u32) -> WideDyadic {
        match num.trailing_zeros() {
            None => exp = 0,
            Some(tz) => {
                let tz = (tz as u32).min(exp);
                num >>= tz as usize;
                exp -= tz;
            }
        }
        WideDyadic { num, exp }
    }

    fn aligned(&self, other: &WideDyadic) -> (BigInt, BigInt, u32) {
        let e = self.exp.max(other.exp);
        (&self.num << (e - self.exp) as usize, &other.num << (e - other.exp) as usize, e)
    }

    fn add(&self, other: &WideDyadic) -> WideDyadic {
        let (a, b, e) = self.aligned(other);
        WideDyadic::normalized(a + b, e)
    }

    fn sub(&self, other: &WideDyadic) -> WideDyadic {
        let (a, b, e) = self.aligned(other);
        WideDyadic::normalized(a - b, e)
    }

    fn mul_pow2(&self, k: i32) -> WideDyadic {
        if k >= 0 {
            let k = k as u32;
            if k <= self.exp {
                WideDyadic { num: self.num.clone(), exp: self.exp - k }
            } else {
                WideDyadic { num: &self.num << (k - self.exp) as usize, exp: 0 }
            }
        } else {
            WideDyadic::normalized(self.num.clone(), self.exp + (-k) as u32)
        }
    }
}

impl PartialOrd for WideDyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for WideDyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.exp == other.exp {
            return self.num.cmp(&other.num);
        }
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

/// A dyadic PL homeomorphism of `[0, 1]` with unbounded denominators, kept
/// free of redundant breakpoints. Words whose partial products are too fine
/// for [`Dyadic`] are checked in this representation.
#[derive(Clone, PartialEq, Eq)]
struct WidePL {
    xs: Vec<WideDyadic>,
    ys: Vec<WideDyadic>,
    slopes: Vec<i32>,
}

impl WidePL {
    fn from_map(f: &PLMap) -> WidePL {
        let mut w = WidePL {
            xs: f.breakpoints().iter().map(|&d| WideDyadic::from(d)).collect(),
            ys: f.values().iter().map(|&d| WideDyadic::from(d)).collect(),
            slopes: f.slope_exponents().to_vec(),
        };
        w.merge();
        w
    }

    fn piece(&self, t: &WideDyadic) -> usize {
        match self.xs.binary_search(t) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i - 1,
        }
    }

    fn eval(&self, t: &WideDyadic) -> WideDyadic {
        let i = self.piece(t);
        self.ys[i].add(&t.sub(&self.xs[i]).mul_pow2(self.slopes[i]))
    }

    fn inverse(&self) -> WidePL {
        WidePL { xs: self.ys.clone(), ys: self.xs.clone(), slopes: self.slopes.iter().map(|k| -k).collect() }
    }

    /// `self ∘ g`.
    fn compose(&self, g: &WidePL) -> WidePL {
        let ginv = g.inverse();
        let mut xs: Vec<WideDyadic> = g.xs.iter().cloned().chain(self.xs.iter().map(|x| ginv.eval(x))).collect();
        xs.sort();
        xs.dedup();
        let mut ys = Vec::with_capacity(xs.len());
        let mut slopes = Vec::with_capacity(xs.len());
        for (j, x) in xs.iter().enumerate() {
            let gx = g.eval(x);
            if j + 1 < xs.len() {
                slopes.push(g.slopes[g.piece(x)] + self.slopes[self.piece(&gx)]);
            }
            ys.push(self.eval(&gx));
        }
        let mut w = WidePL { xs, ys, slopes };
        w.merge();
        w
    }

    fn merge(&mut self) {
        let n = self.slopes.len();
        let mut xs = vec![self.xs[0].clone()];
        let mut ys = vec![self.ys[0].clone()];
        let mut slopes: Vec<i32> = Vec::new();
        for i in 0..n {
            if slopes.last() == Some(&self.slopes[i]) {
                *xs.last_mut().unwrap() = self.xs[i + 1].clone();
                *ys.last_mut().unwrap() = self.ys[i + 1].clone();
            } else {
                slopes.push(self.slopes[i]);
                xs.push(self.xs[i + 1].clone());
                ys.push(self.ys[i + 1].clone());
            }
        }
        *self = WidePL { xs, ys, slopes };
    }
}

/// Whether the word composes to `f` in `F` on `[0, 1]`, computed without
/// bounds on the denominators of intermediate products.
pub fn word_realizes(w: &[FLetter], f: &PLMap) -> bool {
    if f.domain() != (Dyadic::ZERO, Dyadic::ONE) {
        return false;
    }
    let a = WidePL::from_map(&standard_a());
    let b = WidePL::from_map(&standard_b());
    let (ai, bi) = (a.inverse(), b.inverse());
    let mut acc = WidePL::from_map(&PLMap::identity(Dyadic::ZERO, Dyadic::ONE));
    for l in w {
        let g = match l {
            FLetter::A => &a,
            FLetter::AInv => &ai,
            FLetter::B => &b,
            FLetter::BInv => &bi,
        };
        acc = acc.compose(g);
    }
    acc == WidePL::from_map(f)
}

#[derive(Clone, Debug)]
enum Tree {
    Leaf,
    Node(Box<Tree>, Box<Tree>),
}

impl Tree {
    /// Builds the tree of a subdivision of `[lo, lo + 2^-depth]` into standard dyadic intervals.
    fn from_intervals(ivs: &[(Dyadic, Dyadic)], lo: Dyadic, len: Dyadic) -> Tree {
        if ivs.len() == 1 {
            debug_assert!(ivs[0] == (lo, lo + len));
            return Tree::Leaf;
        }
        let mid = lo + len.half();
        let k = ivs.iter().position(|iv| iv.0 == mid).expect("standard dyadic subdivision");
        Tree::Node(
            Box::new(Tree::from_intervals(&ivs[..k], lo, len.half())),
            Box::new(Tree::from_intervals(&ivs[k..], mid, len.half())),
        )
    }

    /// Rotates right at the first right-spine node whose left child is split.
    /// Returns the depth of that node, or `None` for a right vine.
    fn rotate_spine(&mut self, depth: usize) -> Option<usize> {
        match self {
            Tree::Leaf => None,
            Tree::Node(l, r) => {
                if let Tree::Node(_, _) = **l {
                    let old = std::mem::replace(self, Tree::Leaf);
                    if let Tree::Node(l, r) = old {
                        if let Tree::Node(ll, lr) = *l {
                            *self = Tree::Node(ll, Box::new(Tree::Node(lr, r)));
                        }
                    }
                    Some(depth)
                } else {
                    r.rotate_spine(depth + 1)
                }
            }
        }
    }
}

/// Word for the spine rotation `R_k`: `R_0 = A`, `R_k = A^(k-1) B A^-(k-1)`.
fn rotation_word(k: usize) -> Vec<FLetter> {
    if k == 0 {
        return vec![FLetter::A];
    }
    let mut w = vec![FLetter::A; k - 1];
    w.push(FLetter::B);
    w.extend(std::iter::repeat_n(FLetter::AInv, k - 1));
    w
}

/// Word for a positive element sending the subdivision to the right vine.
fn vine_word(ivs: &[(Dyadic, Dyadic)]) -> Vec<FLetter> {
    let mut tree = Tree::from_intervals(ivs, Dyadic::ZERO, Dyadic::ONE);
    let mut word = Vec::new();
    while let Some(k) = tree.rotate_spine(0) {
        let mut w = rotation_word(k);
        w.extend(word);
        word = w;
    }
    word
}

fn is_standard(a: Dyadic, b: Dyadic) -> bool {
    let len = b - a;
    match len.log2_ratio(Dyadic::ONE) {
        Some(k) if k <= 0 => {
            let q = a.mul_pow2(-k);
            q.is_integer()
        }
        _ => false,
    }
}

/// Writes an element of `F` on `[0, 1]` as a word in `A` and `B`.
pub fn word_for_unit(f: &PLMap) -> Result<Vec<FLetter>> {
    if f.domain() != (Dyadic::ZERO, Dyadic::ONE) || f.image() != (Dyadic::ZERO, Dyadic::ONE) {
        return Err(Error::DomainMismatch("element of F must act on [0, 1]".into()));
    }
    let mut dom = Vec::new();
    let mut stack = vec![(Dyadic::ZERO, Dyadic::ONE)];
    while let Some((a, b)) = stack.pop() {
        let affine = !f.breakpoints().iter().any(|&t| t > a && t < b);
        if affine && is_standard(f.eval(a), f.eval(b)) {
            dom.push((a, b));
        } else {
            let m = Dyadic::mid(a, b);
            stack.push((m, b));
            stack.push((a, m));
        }
    }
    let ran: Vec<(Dyadic, Dyadic)> = dom.iter().map(|&(a, b)| (f.eval(a), f.eval(b))).collect();
    let mut w = invert_word(&vine_word(&ran));
    w.extend(vine_word(&dom));
    Ok(reduce_word(&w))
}

/// Writes an element of `F_J` (a map on the closure of `J` fixing its
/// endpoints) as a word in the generators `(A_J, B_J)`.
pub fn word_for(j: &Interval, f: &PLMap) -> Result<Vec<FLetter>> {
    if f.domain() != (j.lo, j.hi) || f.image() != (j.lo, j.hi) {
        return Err(Error::DomainMismatch(format!("element is not in F_{j}")));
    }
    word_for_unit(&transport_from(j, f))
}

/// An element `h` of `F'_I` with `h(J1) = J2`; the closures of `J1` and `J2` must lie in `I`.
pub fn conj_interval(i: &Interval, j1: &Interval, j2: &Interval) -> Result<PLMap> {
    if !i.contains_closure(j1) || !i.contains_closure(j2) {
        return Err(Error::Precondition(format!(
            "closures of {j1} and {j2} must lie inside {i}"
        )));
    }
    if j1 == j2 {
        return Ok(PLMap::identity(i.lo, i.hi));
    }
    let el = Dyadic::mid(i.lo, j1.lo.min(j2.lo));
    let er = Dyadic::mid(i.hi, j1.hi.max(j2.hi));
    let h = PLMap::concat(&[
        PLMap::identity(i.lo, el),
        interval_map(el, j1.lo, el, j2.lo),
        interval_map(j1.lo, j1.hi, j2.lo, j2.hi),
        interval_map(j1.hi, er, j2.hi, er),
        PLMap::identity(er, i.hi),
    ])?;
    debug_assert!(h.eval(j1.lo) == j2.lo && h.eval(j1.hi) == j2.hi);
    Ok(h)
}

/// An element `h` of `F'_I` with `h(p) = q` for points `p, q` of `I`.
pub fn move_point(i: &Interval, p: Dyadic, q: Dyadic) -> Result<PLMap> {
    if !i.contains(p) || !i.contains(q) {
        return Err(Error::Precondition(format!("points {p} and {q} must lie in {i}")));
    }
    if p == q {
        return Ok(PLMap::identity(i.lo, i.hi));
    }
    let el = Dyadic::mid(i.lo, p.min(q));
    let er = Dyadic::mid(i.hi, p.max(q));
    PLMap::concat(&[
        PLMap::identity(i.lo, el),
        interval_map(el, p, el, q),
        interval_map(p, er, q, er),
        PLMap::identity(er, i.hi),
    ])
}

/// Factors `g` in `F'_J` into elements supported in the cover intervals.
///
/// All maps, input and output, live on the same closed domain as `g`. The
/// returned list `[(i_1, f_1), …, (i_n, f_n)]` satisfies
/// `g = f_1 ∘ ⋯ ∘ f_n` with the closed support of `f_k` inside `cover[i_k]`.
pub fn fragment_f(g: &PLMap, cover: &[Interval]) -> Result<Vec<(usize, PLMap)>> {
    let (u, v) = g.domain();
    if g.image() != (u, v) {
        return Err(Error::DomainMismatch("fragmented map must fix its domain endpoints".into()));
    }
    let mut out = Vec::new();
    for (s, e) in g.support_components() {
        let piece = PLMap::concat(&[
            if u < s { Some(PLMap::identity(u, s)) } else { None },
            Some(g.restrict(s, e)),
            if e < v { Some(PLMap::identity(e, v)) } else { None },
        ]
        .into_iter()
        .flatten()
        .collect::<Vec<_>>())?;
        let chain = greedy_chain(cover, s, e)?;
        fragment_component(&piece, &chain, cover, &mut out)?;
    }
    Ok(out)
}

fn greedy_chain(cover: &[Interval], s: Dyadic, e: Dyadic) -> Result<Vec<usize>> {
    let uncovered = |t: Dyadic| Error::Precondition(format!("cover does not cover the support point {t}"));
    let pick = |t: Dyadic| {
        (0..cover.len())
            .filter(|&i| cover[i].contains(t))
            .max_by(|&a, &b| cover[a].hi.cmp(&cover[b].hi).then(b.cmp(&a)))
    };
    let mut chain = vec![pick(s).ok_or_else(|| uncovered(s))?];
    while cover[*chain.last().unwrap()].hi <= e {
        let b = cover[*chain.last().unwrap()].hi;
        chain.push(pick(b).ok_or_else(|| uncovered(b))?);
    }
    Ok(chain)
}

fn fragment_component(
    g: &PLMap,
    chain: &[usize],
    cover: &[Interval],
    out: &mut Vec<(usize, PLMap)>,
) -> Result<()> {
    let comps = g.support_components();
    let Some(&(s, _)) = comps.first() else {
        return Ok(());
    };
    let e = comps.last().unwrap().1;
    let j1 = cover[chain[0]];
    if chain.len() == 1 || (j1.contains(s) && j1.contains(e)) {
        out.push((chain[0], g.clone()));
        return Ok(());
    }
    let j2 = cover[chain[1]];
    let target = Dyadic::mid(j2.lo.max(s), j1.hi);
    let (u, v) = g.domain();
    let k = move_point(&j1, s, target)?.extend_identity(u, v)?;
    let ki = k.inverse();
    let conj = k.compose(g)?.compose(&ki)?;
    out.push((chain[0], ki));
    fragment_component(&conj, &chain[1..], cover, out)?;
    out.push((chain[0], k));
    Ok(())
}

/// Composite `f_1 ∘ ⋯ ∘ f_n` of maps on a common domain.
pub fn compose_all(domain: (Dyadic, Dyadic), maps: &[PLMap]) -> PLMap {
    let mut acc = PLMap::identity(domain.0, domain.1);
    for m in maps {
        acc = acc.compose(m).unwrap();
    }
    acc
}

/// Commutator `[f, g] = f g f⁻¹ g⁻¹`.
pub fn pl_commutator(f: &PLMap, g: &PLMap) -> PLMap {
    f.compose(g)
        .and_then(|x| x.compose(&f.inverse()))
        .and_then(|x| x.compose(&g.inverse()))
        .expect("commutator of maps on a common domain")
}
