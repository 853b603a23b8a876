//! Closed-interval arithmetic with outward rounding, enough for the rigorous
//! enclosures used by the tangency certificates: ring operations, absolute
//! value, and sine/cosine over full argument ranges.
//!
//! Endpoints are widened by one ulp after every arithmetic operation, so the
//! result interval contains the true real-number image even though each f64
//! operation rounds. That is crude compared to directed rounding but costs
//! only slack, never soundness.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn widen(lo: f64, hi: f64) -> Interval {
    Interval {
        lo: lo.next_down(),
        hi: hi.next_up(),
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn add(&self, other: &Interval) -> Interval {
        widen(self.lo + other.lo, self.hi + other.hi)
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        widen(self.lo - other.hi, self.hi - other.lo)
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let products = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let lo = products.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        widen(lo, hi)
    }

    pub fn scale(&self, c: f64) -> Interval {
        self.mul(&Interval::point(c))
    }

    pub fn square(&self) -> Interval {
        if self.contains_zero() {
            let m = self.lo.abs().max(self.hi.abs());
            widen(0.0, m * m)
        } else {
            let a = self.lo.abs().min(self.hi.abs());
            let b = self.lo.abs().max(self.hi.abs());
            widen(a * a, b * b)
        }
    }

    pub fn abs(&self) -> Interval {
        if self.contains_zero() {
            Interval {
                lo: 0.0,
                hi: self.lo.abs().max(self.hi.abs()),
            }
        } else if self.hi < 0.0 {
            self.neg()
        } else {
            *self
        }
    }

    /// Enclosure of `sin` over the interval: exact modulo one-ulp widening
    /// when the interval spans a critical point, else endpoint monotone.
    pub fn sin(&self) -> Interval {
        if self.width() >= std::f64::consts::TAU {
            return Interval { lo: -1.0, hi: 1.0 };
        }
        let (slo, shi) = (self.lo.sin(), self.hi.sin());
        let mut lo = slo.min(shi);
        let mut hi = slo.max(shi);
        // maxima of sin at pi/2 + 2k pi, minima at -pi/2 + 2k pi
        let half_pi = std::f64::consts::FRAC_PI_2;
        let tau = std::f64::consts::TAU;
        let k_max = ((self.lo - half_pi) / tau).ceil();
        if half_pi + k_max * tau <= self.hi {
            hi = 1.0;
        }
        let k_min = ((self.lo + half_pi) / tau).ceil();
        if -half_pi + k_min * tau <= self.hi {
            lo = -1.0;
        }
        widen(lo.max(-1.0), hi.min(1.0)).clamp_unit_range()
    }

    pub fn cos(&self) -> Interval {
        self.add(&Interval::point(std::f64::consts::FRAC_PI_2)).sin()
    }

    fn clamp_unit_range(self) -> Interval {
        Interval {
            lo: self.lo.max(-1.0),
            hi: self.hi.min(1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_encloses_sampled_values() {
        let x = Interval::new(-0.3, 0.7);
        let y = Interval::new(0.2, 1.5);
        for i in 0..=20 {
            for j in 0..=20 {
                let a = x.lo + (x.hi - x.lo) * i as f64 / 20.0;
                let b = y.lo + (y.hi - y.lo) * j as f64 / 20.0;
                assert!(x.add(&y).contains(a + b));
                assert!(x.sub(&y).contains(a - b));
                assert!(x.mul(&y).contains(a * b));
                assert!(x.square().contains(a * a));
            }
        }
    }

    #[test]
    fn square_of_zero_spanning_interval_is_nonnegative() {
        let x = Interval::new(-2.0, 1.0);
        let s = x.square();
        assert!(s.lo <= 0.0 && s.lo >= -f64::MIN_POSITIVE);
        assert!(s.contains(4.0));
        assert!(s.contains(0.0));
    }

    #[test]
    fn sin_enclosure_catches_interior_extrema() {
        use std::f64::consts::{FRAC_PI_2, PI};
        let spanning_max = Interval::new(1.0, 2.0); // contains pi/2
        let s = spanning_max.sin();
        assert!(s.contains(1.0));
        assert!(s.lo <= 1.0f64.sin().min(2.0f64.sin()));

        let spanning_min = Interval::new(PI, 2.0 * PI); // contains 3pi/2
        assert!(spanning_min.sin().contains(-1.0));

        let monotone = Interval::new(0.1, 0.4);
        let sm = monotone.sin();
        assert!(sm.contains(0.1f64.sin()) && sm.contains(0.4f64.sin()));
        assert!(!sm.contains(1.0));

        // enclosure property on a sampled grid
        let x = Interval::new(-1.0, 7.0);
        let sx = x.sin();
        let cx = x.cos();
        for i in 0..=400 {
            let t = -1.0 + 8.0 * i as f64 / 400.0;
            assert!(sx.contains(t.sin()));
            assert!(cx.contains(t.cos()));
        }
        let _ = FRAC_PI_2;
    }

    #[test]
    fn wide_interval_saturates_trig_range() {
        let x = Interval::new(0.0, 100.0);
        assert_eq!(x.sin(), Interval::new(-1.0, 1.0));
        assert_eq!(x.cos(), Interval::new(-1.0, 1.0));
    }

    #[test]
    fn hull_and_intersects() {
        let a = Interval::new(0.0, 1.0);
        let b = Interval::new(2.0, 3.0);
        assert!(!a.intersects(&b));
        assert_eq!(a.hull(&b), Interval::new(0.0, 3.0));
        assert!(a.intersects(&Interval::new(0.5, 2.5)));
    }
}
