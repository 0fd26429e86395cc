//! Seeded random rational sample points with singular-guard rejection.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Guard, Point, Value, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("could not find an admissible sample point after {attempts} attempts")]
    Exhausted { attempts: usize },
}

/// Bounds for a sampled coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi, open: false }
    }

    pub fn open(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi, open: true }
    }

    pub fn contains(&self, x: f64) -> bool {
        if self.open {
            x > self.lo && x < self.hi
        } else {
            x >= self.lo && x <= self.hi
        }
    }
}

/// Produces sample points for a list of variables.
pub trait Sampler {
    fn sample(&mut self, vars: &[Var]) -> Point;

    /// Draw points until every guard holds.
    fn sample_admissible(
        &mut self,
        vars: &[Var],
        guards: &BTreeSet<Guard>,
        max_attempts: usize,
    ) -> Result<Point, SampleError> {
        for _ in 0..max_attempts {
            let p = self.sample(vars);
            if guards.iter().all(|g| guard_holds(g, &p)) {
                return Ok(p);
            }
        }
        Err(SampleError::Exhausted { attempts: max_attempts })
    }

    /// A uniform rational draw, used for random linear combinations.
    fn coefficient(&mut self) -> BigRational;
}

/// Exact guard check when the point and guard evaluate exactly.
pub fn guard_holds(g: &Guard, p: &Point) -> bool {
    match g.expr().eval(p) {
        Ok(Value::Exact(r)) => match g {
            Guard::NonZero(_) => !r.is_zero(),
            Guard::Positive(_) => r.is_positive(),
        },
        Ok(Value::Float(_)) => g.holds(p, 1e-12),
        Err(_) => false,
    }
}

pub const DEFAULT_HEIGHT: i64 = 20;
pub const DEFAULT_ATTEMPTS: usize = 10_000;

/// Rational points `p/q` with `|p| <= height`, `1 <= q <= height`, drawn
/// from a seeded ChaCha stream.
#[derive(Clone, Debug)]
pub struct RationalSampler {
    rng: ChaCha8Rng,
    height: i64,
    default: Interval,
    overrides: BTreeMap<Var, Interval>,
}

impl RationalSampler {
    pub fn new(seed: u64) -> RationalSampler {
        let h = DEFAULT_HEIGHT as f64;
        RationalSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            height: DEFAULT_HEIGHT,
            default: Interval::closed(-h, h),
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_default(mut self, iv: Interval) -> Self {
        self.default = iv;
        self
    }

    pub fn with_interval(mut self, v: Var, iv: Interval) -> Self {
        self.overrides.insert(v, iv);
        self
    }

    pub fn set_interval(&mut self, v: Var, iv: Interval) {
        self.overrides.insert(v, iv);
    }

    pub fn interval(&self, v: Var) -> Interval {
        self.overrides.get(&v).copied().unwrap_or(self.default)
    }

    fn draw(&mut self, iv: Interval) -> BigRational {
        let h = self.height;
        for _ in 0..1000 {
            let q = self.rng.random_range(1..=h);
            let lo = ((iv.lo * q as f64).ceil() as i64).max(-h);
            let hi = ((iv.hi * q as f64).floor() as i64).min(h);
            if lo > hi {
                continue;
            }
            let p = self.rng.random_range(lo..=hi);
            let r = BigRational::new(BigInt::from(p), BigInt::from(q));
            if iv.contains(p as f64 / q as f64) {
                return r;
            }
        }
        // interval too narrow for the height bound; fall back to its midpoint
        let mid = 0.5 * (iv.lo + iv.hi);
        BigRational::from_float(mid).unwrap_or_else(BigRational::zero)
    }
}

impl Sampler for RationalSampler {
    fn sample(&mut self, vars: &[Var]) -> Point {
        let mut p = Point::new();
        for &v in vars {
            let iv = self.interval(v);
            let r = self.draw(iv);
            p.set(v, Value::Exact(r));
        }
        p
    }

    fn coefficient(&mut self) -> BigRational {
        let h = self.height;
        let iv = Interval::closed(-(h as f64), h as f64);
        self.draw(iv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    #[test]
    fn same_seed_same_points() {
        let vars = [Var::X, Var::Y(1), Var::Dy(1)];
        let a = RationalSampler::new(7).sample(&vars);
        let b = RationalSampler::new(7).sample(&vars);
        assert_eq!(a, b);
        let c = RationalSampler::new(8).sample(&vars);
        assert_ne!(a, c);
    }

    #[test]
    fn intervals_are_respected() {
        let mut s = RationalSampler::new(1).with_interval(Var::Dy(2), Interval::open(0.1, 2.0));
        for _ in 0..200 {
            let p = s.sample(&[Var::Dy(2)]);
            let x = p.get(Var::Dy(2)).unwrap().to_f64();
            assert!(x > 0.1 && x < 2.0);
        }
    }

    #[test]
    fn guards_reject_singular_points() {
        let e = Expr::var(Var::Dy(1)) / (Expr::var(Var::Dy(2)) - Expr::var(Var::Y(1)));
        let guards = e.guards();
        let mut s = RationalSampler::new(3).with_default(Interval::closed(-1.0, 1.0));
        for _ in 0..100 {
            let p = s.sample_admissible(&[Var::Dy(1), Var::Dy(2), Var::Y(1)], &guards, 100).unwrap();
            assert!(e.eval(&p).is_ok());
        }
    }

    #[test]
    fn impossible_guard_exhausts() {
        let y = Expr::var(Var::Y(1));
        let guards = BTreeSet::from([Guard::Positive(-Expr::powi(y, 2))]);
        let mut s = RationalSampler::new(3);
        assert!(matches!(
            s.sample_admissible(&[Var::Y(1)], &guards, 50),
            Err(SampleError::Exhausted { attempts: 50 })
        ));
    }
}
