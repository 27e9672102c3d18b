//! Exact continuous piecewise-linear functions on a half line `[start, ∞)`.
//!
//! A function is a list of breakpoints `(θ_i, v_i)` with strictly increasing
//! `θ_i`, linear interpolation between them and a tail slope after the last
//! one. The representation is canonical: collinear breakpoints are merged, so
//! derived `PartialEq` is semantic equality.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, one, parse_rational, zero, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pwl {
    points: Vec<(Rational, Rational)>,
    tail: Rational,
}

fn seg_slope(p: &(Rational, Rational), q: &(Rational, Rational)) -> Rational {
    (&q.1 - &p.1) / (&q.0 - &p.0)
}

impl Pwl {
    pub fn new(points: Vec<(Rational, Rational)>, tail: Rational) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Contract("piecewise-linear function needs a breakpoint".into()));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Contract("breakpoints must be strictly increasing".into()));
        }
        Ok(Self::canonical(points, tail))
    }

    fn canonical(points: Vec<(Rational, Rational)>, tail: Rational) -> Self {
        let n = points.len();
        let mut kept: Vec<(Rational, Rational)> = Vec::with_capacity(n);
        for i in 0..n {
            if i == 0 {
                kept.push(points[0].clone());
                continue;
            }
            let slope_in = seg_slope(kept.last().unwrap(), &points[i]);
            let slope_out = if i + 1 < n { seg_slope(&points[i], &points[i + 1]) } else { tail.clone() };
            if slope_in != slope_out {
                kept.push(points[i].clone());
            }
        }
        Pwl { points: kept, tail }
    }

    /// `θ ↦ slope·θ + intercept` on `[0, ∞)`.
    pub fn affine(slope: Rational, intercept: Rational) -> Self {
        Pwl { points: vec![(zero(), intercept)], tail: slope }
    }

    pub fn identity() -> Self {
        Self::affine(one(), zero())
    }

    pub fn constant(v: Rational) -> Self {
        Self::affine(zero(), v)
    }

    /// Cumulative integral of a piecewise-constant rate given as `(start, rate)`
    /// pairs; the value at the first start is zero.
    pub fn from_rates(rates: &[(Rational, Rational)]) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::Contract("rate list is empty".into()));
        }
        if rates.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Contract("rate segment starts must be strictly increasing".into()));
        }
        let mut points = Vec::with_capacity(rates.len());
        let mut value = zero();
        for (i, (start, _)) in rates.iter().enumerate() {
            if i > 0 {
                let (prev_start, prev_rate) = &rates[i - 1];
                value += prev_rate * (start - prev_start);
            }
            points.push((start.clone(), value.clone()));
        }
        Ok(Self::canonical(points, rates.last().unwrap().1.clone()))
    }

    /// Piecewise-constant slopes as `(start, rate)` pairs, the inverse of
    /// [`Pwl::from_rates`] up to the starting value.
    pub fn rates(&self) -> Vec<(Rational, Rational)> {
        (0..self.points.len()).map(|i| (self.points[i].0.clone(), self.slope_of(i))).collect()
    }

    pub fn start(&self) -> &Rational {
        &self.points[0].0
    }

    pub fn points(&self) -> &[(Rational, Rational)] {
        &self.points
    }

    pub fn tail_slope(&self) -> &Rational {
        &self.tail
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = &Rational> {
        self.points.iter().map(|p| &p.0)
    }

    pub fn last_breakpoint(&self) -> &Rational {
        &self.points.last().unwrap().0
    }

    /// Slope of the segment that starts at breakpoint `i`.
    fn slope_of(&self, i: usize) -> Rational {
        if i + 1 < self.points.len() {
            seg_slope(&self.points[i], &self.points[i + 1])
        } else {
            self.tail.clone()
        }
    }

    /// Index of the segment containing `θ` (segments are closed on the left).
    fn segment_index(&self, theta: &Rational) -> usize {
        match self.points.binary_search_by(|p| p.0.cmp(theta)) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    fn check_domain(&self, theta: &Rational) -> Result<()> {
        if theta < self.start() {
            Err(Error::Domain(format!(
                "{} lies left of the domain start {}",
                format_rational(theta),
                format_rational(self.start())
            )))
        } else {
            Ok(())
        }
    }

    pub fn eval(&self, theta: &Rational) -> Result<Rational> {
        self.check_domain(theta)?;
        Ok(self.eval_unchecked(theta))
    }

    fn eval_unchecked(&self, theta: &Rational) -> Rational {
        let i = self.segment_index(theta);
        let (x, y) = &self.points[i];
        y + self.slope_of(i) * (theta - x)
    }

    /// Right derivative at `θ`.
    pub fn slope_right(&self, theta: &Rational) -> Result<Rational> {
        self.check_domain(theta)?;
        Ok(self.slope_of(self.segment_index(theta)))
    }

    /// Slopes of all segments: `(start, end, slope)` with `end = None` for the tail.
    pub fn segments(&self) -> Vec<(Rational, Option<Rational>, Rational)> {
        (0..self.points.len())
            .map(|i| {
                let end = self.points.get(i + 1).map(|p| p.0.clone());
                (self.points[i].0.clone(), end, self.slope_of(i))
            })
            .collect()
    }

    pub fn is_nondecreasing(&self) -> bool {
        (0..self.points.len()).all(|i| !self.slope_of(i).is_negative())
    }

    pub fn is_strictly_increasing(&self) -> bool {
        (0..self.points.len()).all(|i| self.slope_of(i).is_positive())
    }

    /// Largest value over the domain, `None` if unbounded above.
    pub fn sup(&self) -> Option<Rational> {
        if self.tail.is_positive() {
            return None;
        }
        self.points.iter().map(|p| p.1.clone()).max()
    }

    pub fn inf(&self) -> Option<Rational> {
        if self.tail.is_negative() {
            return None;
        }
        self.points.iter().map(|p| p.1.clone()).min()
    }

    /// Union of breakpoints of `self` and `other` from the later start on.
    fn merged_breakpoints(&self, other: &Pwl) -> Vec<Rational> {
        let start = std::cmp::max(self.start(), other.start()).clone();
        let mut xs: Vec<Rational> = self
            .breakpoints()
            .chain(other.breakpoints())
            .filter(|x| **x > start)
            .cloned()
            .collect();
        xs.push(start);
        xs.sort();
        xs.dedup();
        xs
    }

    fn zip_linear(&self, other: &Pwl, op: impl Fn(&Rational, &Rational) -> Rational) -> Pwl {
        let xs = self.merged_breakpoints(other);
        let points = xs
            .into_iter()
            .map(|x| {
                let v = op(&self.eval_unchecked(&x), &other.eval_unchecked(&x));
                (x, v)
            })
            .collect();
        Self::canonical(points, op(&self.tail, &other.tail))
    }

    pub fn add(&self, other: &Pwl) -> Pwl {
        self.zip_linear(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Pwl) -> Pwl {
        self.zip_linear(other, |a, b| a - b)
    }

    pub fn scale(&self, k: &Rational) -> Pwl {
        if k.is_zero() {
            return Pwl { points: vec![(self.start().clone(), zero())], tail: zero() };
        }
        let points = self.points.iter().map(|(x, y)| (x.clone(), y * k)).collect();
        Pwl { points, tail: &self.tail * k }
    }

    pub fn add_const(&self, c: &Rational) -> Pwl {
        let points = self.points.iter().map(|(x, y)| (x.clone(), y + c)).collect();
        Pwl { points, tail: self.tail.clone() }
    }

    fn envelope(&self, other: &Pwl, take_min: bool) -> Pwl {
        let xs = self.merged_breakpoints(other);
        let diff = |x: &Rational| self.eval_unchecked(x) - other.eval_unchecked(x);
        let mut cuts = Vec::with_capacity(xs.len() * 2);
        for w in xs.windows(2) {
            cuts.push(w[0].clone());
            let (da, db) = (diff(&w[0]), diff(&w[1]));
            if (da.is_positive() && db.is_negative()) || (da.is_negative() && db.is_positive()) {
                cuts.push(&w[0] + &da * (&w[1] - &w[0]) / (&da - &db));
            }
        }
        let last = xs.last().unwrap().clone();
        let d_last = diff(&last);
        let d_slope = &self.tail - &other.tail;
        cuts.push(last.clone());
        if !d_last.is_zero() && !d_slope.is_zero() && d_last.is_positive() != d_slope.is_positive() {
            cuts.push(&last - &d_last / &d_slope);
        }
        let pick = |a: Rational, b: Rational| match (a.cmp(&b), take_min) {
            (Ordering::Less, true) | (Ordering::Greater, false) => a,
            _ => b,
        };
        let points: Vec<(Rational, Rational)> = cuts
            .into_iter()
            .map(|x| {
                let v = pick(self.eval_unchecked(&x), other.eval_unchecked(&x));
                (x, v)
            })
            .collect();
        let end = &points.last().unwrap().0;
        let tail = match (self.eval_unchecked(end).cmp(&other.eval_unchecked(end)), take_min) {
            (Ordering::Less, true) | (Ordering::Greater, false) => self.tail.clone(),
            (Ordering::Equal, _) => pick(self.tail.clone(), other.tail.clone()),
            _ => other.tail.clone(),
        };
        Self::canonical(points, tail)
    }

    /// Pointwise minimum. Crossing points become exact breakpoints.
    pub fn min(&self, other: &Pwl) -> Pwl {
        self.envelope(other, true)
    }

    pub fn max(&self, other: &Pwl) -> Pwl {
        self.envelope(other, false)
    }

    /// `self ∘ inner` for a nondecreasing `inner`.
    pub fn compose(&self, inner: &Pwl) -> Result<Pwl> {
        if !inner.is_nondecreasing() {
            return Err(Error::Contract("inner function of a composition must be nondecreasing".into()));
        }
        self.compose_any(inner)
    }

    /// `self ∘ inner` for any continuous piecewise-linear `inner` whose range
    /// stays inside the domain of `self`.
    pub fn compose_any(&self, inner: &Pwl) -> Result<Pwl> {
        if inner.tail.is_negative() {
            return Err(Error::Domain("inner function leaves the outer domain eventually".into()));
        }
        if let Some(lo) = inner.inf() {
            self.check_domain(&lo)?;
        }
        let outer_bps: Vec<&Rational> = self.breakpoints().collect();
        let mut xs: Vec<Rational> = inner.breakpoints().cloned().collect();
        let n = inner.points.len();
        for i in 0..n {
            let (a, ga) = &inner.points[i];
            let s = inner.slope_of(i);
            if s.is_zero() {
                continue;
            }
            let gb = inner.points.get(i + 1).map(|p| &p.1);
            for phi in &outer_bps {
                let inside = match gb {
                    Some(gb) => {
                        let (lo, hi) = if ga < gb { (ga, gb) } else { (gb, ga) };
                        *phi > lo && *phi < hi
                    }
                    None => *phi > ga,
                };
                if inside {
                    xs.push(a + (*phi - ga) / &s);
                }
            }
        }
        xs.sort();
        xs.dedup();
        let points = xs
            .into_iter()
            .map(|x| {
                let v = self.eval_unchecked(&inner.eval_unchecked(&x));
                (x, v)
            })
            .collect();
        let tail = if inner.tail.is_zero() { zero() } else { &self.tail * &inner.tail };
        Ok(Self::canonical(points, tail))
    }

    /// `θ ↦ self(θ + delta)` on `[0, ∞)`.
    pub fn shift_arg(&self, delta: &Rational) -> Result<Pwl> {
        self.compose_any(&Pwl::affine(one(), delta.clone()))
    }

    /// Inverse of a strictly increasing function, defined on its range.
    pub fn inverse(&self) -> Result<Pwl> {
        if !self.is_strictly_increasing() {
            return Err(Error::Contract("only strictly increasing functions are invertible".into()));
        }
        let points = self.points.iter().map(|(x, y)| (y.clone(), x.clone())).collect();
        Ok(Self::canonical(points, one() / &self.tail))
    }

    /// The function `F` on `[0, ∞)` with `F(clock(θ)) = self(θ)`, constant
    /// `self(start)` before `clock(start)`. `clock` must be nondecreasing with
    /// `clock(start) >= 0`, and `self` must be constant wherever `clock` is.
    /// This maps a curve indexed by source departure time onto the real
    /// timeline given by an arrival-time function.
    pub fn pushforward(&self, clock: &Pwl) -> Result<Pwl> {
        if !clock.is_nondecreasing() {
            return Err(Error::Contract("clock must be nondecreasing".into()));
        }
        let xs = self.merged_breakpoints(clock);
        let mut points: Vec<(Rational, Rational)> = Vec::with_capacity(xs.len() + 1);
        let c0 = clock.eval_unchecked(&xs[0]);
        if c0.is_negative() {
            return Err(Error::Contract("clock starts before time zero".into()));
        }
        let v0 = self.eval_unchecked(&xs[0]);
        if c0.is_positive() {
            points.push((zero(), v0.clone()));
        }
        for x in &xs {
            let t = clock.eval_unchecked(x);
            let v = self.eval_unchecked(x);
            match points.last() {
                Some((pt, pv)) if *pt == t => {
                    if *pv != v {
                        return Err(Error::Contract(format!(
                            "curve moves while the clock stands still at {}",
                            format_rational(&t)
                        )));
                    }
                }
                _ => points.push((t, v)),
            }
        }
        let tail = if clock.tail.is_positive() {
            &self.tail / &clock.tail
        } else if self.tail.is_zero() {
            zero()
        } else {
            return Err(Error::Contract("curve grows after the clock stops".into()));
        };
        Ok(Self::canonical(points, tail))
    }

    /// Same function on the smaller domain `[from, ∞)`.
    pub fn restrict_from(&self, from: &Rational) -> Result<Pwl> {
        self.check_domain(from)?;
        let i = self.segment_index(from);
        let mut points = vec![(from.clone(), self.eval_unchecked(from))];
        points.extend(self.points[i + 1..].iter().cloned());
        Ok(Self::canonical(points, self.tail.clone()))
    }
}

/// Wire form: `{"breakpoints": [["θ", "v"], ...], "tail_slope": "p/q"}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PwlJson {
    pub breakpoints: Vec<(String, String)>,
    pub tail_slope: String,
}

impl From<&Pwl> for PwlJson {
    fn from(f: &Pwl) -> Self {
        PwlJson {
            breakpoints: f.points.iter().map(|(x, y)| (format_rational(x), format_rational(y))).collect(),
            tail_slope: format_rational(&f.tail),
        }
    }
}

impl TryFrom<&PwlJson> for Pwl {
    type Error = Error;

    fn try_from(j: &PwlJson) -> Result<Pwl> {
        let points = j
            .breakpoints
            .iter()
            .map(|(x, y)| Ok((parse_rational(x)?, parse_rational(y)?)))
            .collect::<Result<Vec<_>>>()?;
        Pwl::new(points, parse_rational(&j.tail_slope)?)
    }
}

impl Serialize for Pwl {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PwlJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pwl {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PwlJson::deserialize(d)?;
        Pwl::try_from(&j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn pwl(points: &[(i64, i64)], tail: i64) -> Pwl {
        Pwl::new(points.iter().map(|&(x, y)| (int(x), int(y))).collect(), int(tail)).unwrap()
    }

    #[test]
    fn eval_identity_and_constant_tail() {
        assert_eq!(Pwl::identity().eval(&ratio(7, 2)).unwrap(), ratio(7, 2));
        let f = pwl(&[(0, 0), (1, 2)], 0);
        assert_eq!(f.eval(&int(3)).unwrap(), int(2));
    }

    #[test]
    fn eval_rejects_negative_time() {
        assert!(matches!(Pwl::identity().eval(&int(-1)), Err(Error::Domain(_))));
    }

    #[test]
    fn cumulative_of_rates() {
        // inflow 2 on [0,1), then 1
        let f = Pwl::from_rates(&[(int(0), int(2)), (int(1), int(1))]).unwrap();
        assert_eq!(f.eval(&int(2)).unwrap(), int(3));
        assert_eq!(f.rates(), vec![(int(0), int(2)), (int(1), int(1))]);
    }

    #[test]
    fn canonical_merges_collinear() {
        let f = pwl(&[(0, 0), (1, 1), (2, 2)], 1);
        assert_eq!(f, Pwl::identity());
        assert_eq!(f.points().len(), 1);
    }

    #[test]
    fn min_with_constant() {
        let m = Pwl::identity().min(&Pwl::constant(int(5)));
        assert_eq!(m, pwl(&[(0, 0), (5, 5)], 0));
        let f = pwl(&[(0, 3), (2, 1)], 2);
        assert_eq!(f.min(&f), f);
    }

    #[test]
    fn min_crossing_in_tail() {
        // θ+1 vs 2θ cross at θ=1 with value 2
        let a = Pwl::affine(int(1), int(1));
        let b = Pwl::affine(int(2), int(0));
        let m = a.min(&b);
        assert_eq!(m, pwl(&[(0, 0), (1, 2)], 1));
        assert_eq!(a.max(&b), pwl(&[(0, 1), (1, 2)], 2));
    }

    #[test]
    fn min_crossing_inside_segment() {
        let a = pwl(&[(0, 0), (4, 4)], 0);
        let b = pwl(&[(0, 3), (4, 1)], 0);
        let m = a.min(&b);
        // crossing where θ = 3 - θ/2 → θ = 2, value 2
        assert_eq!(m, pwl(&[(0, 0), (2, 2), (4, 1)], 0));
    }

    #[test]
    fn compose_affine() {
        let f = Pwl::affine(int(2), int(0));
        let g = Pwl::affine(int(1), int(1));
        assert_eq!(f.compose(&g).unwrap(), Pwl::affine(int(2), int(2)));
        let h = pwl(&[(0, 1), (3, 4)], 0);
        assert_eq!(h.compose(&Pwl::identity()).unwrap(), h);
    }

    #[test]
    fn compose_picks_up_outer_breakpoints() {
        let outer = pwl(&[(0, 0), (2, 2)], 0); // min(θ, 2)
        let inner = Pwl::affine(int(2), int(0));
        assert_eq!(outer.compose(&inner).unwrap(), pwl(&[(0, 0), (1, 2)], 0));
    }

    #[test]
    fn compose_rejects_decreasing_inner() {
        let inner = pwl(&[(0, 5), (1, 4)], 1);
        assert!(matches!(Pwl::identity().compose(&inner), Err(Error::Contract(_))));
        assert!(Pwl::identity().compose_any(&inner).is_ok());
    }

    #[test]
    fn inverse_of_label_shape() {
        // 2θ+1 on [0,1), θ+2 after
        let l = pwl(&[(0, 1), (1, 3)], 1);
        let inv = l.inverse().unwrap();
        let expected = Pwl::new(vec![(int(1), int(0)), (int(3), int(1))], int(1)).unwrap();
        assert_eq!(inv, expected);
        assert_eq!(inv.eval(&int(2)).unwrap(), ratio(1, 2));
        assert_eq!(Pwl::identity().inverse().unwrap(), Pwl::identity());
        assert_eq!(Pwl::affine(int(2), int(0)).inverse().unwrap(), Pwl::affine(ratio(1, 2), int(0)));
    }

    #[test]
    fn inverse_requires_strict_increase() {
        assert!(pwl(&[(0, 0), (1, 1)], 0).inverse().is_err());
    }

    #[test]
    fn pushforward_onto_arrival_times() {
        // particles indexed by θ arrive at 2θ+1; cumulative count d·θ with d=2
        let clock = Pwl::affine(int(2), int(1));
        let count = Pwl::affine(int(2), int(0));
        let real = count.pushforward(&clock).unwrap();
        assert_eq!(real, pwl(&[(0, 0), (1, 0)], 1));
    }

    #[test]
    fn restrict_keeps_values() {
        let f = pwl(&[(0, 0), (2, 4)], 1);
        let g = f.restrict_from(&int(1)).unwrap();
        assert_eq!(g.eval(&int(3)).unwrap(), int(5));
        assert_eq!(g.start(), &int(1));
    }

    #[test]
    fn json_round_trip() {
        let f = pwl(&[(0, 1), (3, 4)], 2);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"breakpoints":[["0/1","1/1"],["3/1","4/1"]],"tail_slope":"2/1"}"#);
        let back: Pwl = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }
}
