//! Leafwise exhaustion: crossings of two growing leaf windows, averaged by
//! window size, recover the pairing. This is the dynamical route: its
//! validity rests on the convergence of leafwise averages, so each factor
//! must either be uniquely ergodic or have compact leaves.

use crate::cantor::{holonomy_invariance_deviation, ReturnMap};
use crate::error::{Result, SolenoidError};
use crate::model::{Family, LinearDirections, SolenoidModel};

/// How averages along leaves converge for a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ergodicity {
    /// Every leafwise average converges to the same transversal integral;
    /// the exhaustion limit does not depend on the chosen leaf.
    UniquelyErgodic,
    /// Leaves are compact. Averages converge on each leaf separately, and
    /// the exhaustion recovers the count of the leaf through the base.
    CompactLeaves,
}

const SLOPE_DENOMINATOR_SCAN: i64 = 2000;
const SLOPE_RATIONAL_TOL: f64 = 1e-8;
const INVARIANCE_TOL: f64 = 1e-12;

/// Classify how leafwise averages of the family converge, or fail with the
/// reason they do not.
pub fn unique_ergodicity(m: &SolenoidModel) -> Result<Ergodicity> {
    match &m.family {
        Family::Linear(d) => match &d.directions {
            LinearDirections::Slope(a) => {
                for q in 1..=SLOPE_DENOMINATOR_SCAN {
                    let v = a * q as f64;
                    if (v - v.round()).abs() < SLOPE_RATIONAL_TOL {
                        return Err(SolenoidError::NotUniquelyErgodic(format!(
                            "slope {a} is within {SLOPE_RATIONAL_TOL:.0e} of {}/{q}; \
                             rational flows decompose into closed orbits",
                            v.round() as i64
                        )));
                    }
                }
                Ok(Ergodicity::UniquelyErgodic)
            }
            LinearDirections::Integer(_) => Ok(Ergodicity::CompactLeaves),
        },
        Family::Graph { .. } | Family::Points { .. } => Ok(Ergodicity::CompactLeaves),
        Family::Suspension(sd) => {
            let depth = m.transversal.depth();
            let dev = holonomy_invariance_deviation(&m.transversal, &sd.return_map, depth)?;
            if dev > INVARIANCE_TOL {
                return Err(SolenoidError::NotUniquelyErgodic(format!(
                    "transversal measure moves by {dev:.3e} under the return map"
                )));
            }
            match &sd.return_map {
                // the odometer cycles all depth-d cylinders, so an invariant
                // measure is uniform at every depth: strict ergodicity
                ReturnMap::Odometer => Ok(Ergodicity::UniquelyErgodic),
                ReturnMap::Identity | ReturnMap::Permutation { .. } => {
                    Ok(Ergodicity::CompactLeaves)
                }
            }
        }
    }
}

/// One exhaustion window size and the crossing statistics at that size.
#[derive(Debug, Clone)]
pub struct ExhaustionStep {
    pub radius: f64,
    /// Signed crossings between the two windows (all crossings of a fixed
    /// pair of straight leaves share one sign).
    pub crossings: i64,
    /// Crossings normalised by window sizes and masses; converges to the
    /// intersection pairing.
    pub estimate: f64,
    /// Counting error: one lattice rounding per periodic chart copy plus
    /// the window boundary effects, divided by the same normalisation.
    pub discrepancy_bound: f64,
}

enum ExKind {
    Sloped(f64),
    Vertical,
}

struct ExLine {
    kind: ExKind,
    x: f64,
    y: f64,
    tau: f64,
}

impl ExLine {
    /// Euclidean norm of the direction vector per unit base length.
    fn chart_norm(&self) -> f64 {
        match self.kind {
            ExKind::Sloped(s) => (1.0 + s * s).sqrt(),
            ExKind::Vertical => 1.0,
        }
    }
}

fn ex_line(m: &SolenoidModel, base: &[f64]) -> Result<ExLine> {
    if base.len() != 2 || base.iter().any(|v| !v.is_finite()) {
        return Err(SolenoidError::Parameter(
            "exhaustion base must be a finite point of the 2-torus".into(),
        ));
    }
    let kind = match &m.family {
        Family::Linear(d) => match &d.directions {
            LinearDirections::Slope(a) => {
                // a rational slope would make the estimate leaf-dependent
                unique_ergodicity(m)?;
                ExKind::Sloped(*a)
            }
            LinearDirections::Integer(cols) if cols.len() == 1 && cols[0] == vec![0, 1] => {
                ExKind::Vertical
            }
            LinearDirections::Integer(cols)
                if cols.len() == 1 && cols[0].len() == 2 && cols[0][0] == 1 =>
            {
                ExKind::Sloped(cols[0][1] as f64)
            }
            _ => {
                return Err(SolenoidError::Unsupported(
                    "exhaustion windows need positively oriented lines on the 2-torus".into(),
                ))
            }
        },
        _ => {
            return Err(SolenoidError::Unsupported(
                "exhaustion averages are implemented for linear families".into(),
            ))
        }
    };
    Ok(ExLine {
        kind,
        x: base[0],
        y: base[1],
        tau: m.transversal.total_mass(),
    })
}

/// Crossing averages of two leaf windows of arclength `2 radius`, centred
/// at `base1` on a leaf of `m1` and `base2` on a leaf of `m2`, one step per
/// radius. Windows are half-open so adjacent exhaustion shells never share
/// a crossing.
pub fn exhaustion_estimate(
    m1: &SolenoidModel,
    m2: &SolenoidModel,
    base1: &[f64],
    base2: &[f64],
    radii: &[f64],
) -> Result<Vec<ExhaustionStep>> {
    if m1.ambient != m2.ambient {
        return Err(SolenoidError::Construction(
            "exhaustion needs a common ambient manifold".into(),
        ));
    }
    if !m1.ambient.is_torus() || m1.ambient_dim() != 2 {
        return Err(SolenoidError::Unsupported(
            "exhaustion windows are implemented on the 2-torus".into(),
        ));
    }
    let l1 = ex_line(m1, base1)?;
    let l2 = ex_line(m2, base2)?;
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0) || !r.is_finite() {
                return Err(SolenoidError::Parameter(format!(
                    "exhaustion radius {r} must be positive"
                )));
            }
            step(&l1, &l2, r)
        })
        .collect()
}

fn step(l1: &ExLine, l2: &ExLine, r: f64) -> Result<ExhaustionStep> {
    let scale = l1.tau * l2.tau * l1.chart_norm() * l2.chart_norm() / (4.0 * r * r);
    let (raw, sign, slack) = match (&l1.kind, &l2.kind) {
        (ExKind::Sloped(s1), ExKind::Sloped(s2)) => {
            if s1 == s2 {
                return Err(SolenoidError::Tangency {
                    cylinder: "(leaves)".into(),
                    reason: "parallel leaves have no transversal exhaustion".into(),
                });
            }
            let (raw, copies, h1, h2) = count_sloped(*s1, (l1.x, l1.y), *s2, (l2.x, l2.y), r);
            let slack = (s2 - s1).abs() * 2.0 * h1 + 2.0 * (h1 + h2) + 2.0;
            let _ = copies;
            (raw, (s2 - s1).signum(), slack)
        }
        (ExKind::Sloped(s), ExKind::Vertical) => {
            let (raw, hits, h) = count_vertical(*s, (l1.x, l1.y), (l2.x, l2.y), r);
            let _ = hits;
            (raw, 1.0, 2.0 * r + 2.0 * h + 2.0)
        }
        (ExKind::Vertical, ExKind::Sloped(s)) => {
            let (raw, hits, h) = count_vertical(*s, (l2.x, l2.y), (l1.x, l1.y), r);
            let _ = hits;
            (raw, -1.0, 2.0 * r + 2.0 * h + 2.0)
        }
        (ExKind::Vertical, ExKind::Vertical) => {
            return Err(SolenoidError::Tangency {
                cylinder: "(leaves)".into(),
                reason: "parallel leaves have no transversal exhaustion".into(),
            });
        }
    };
    Ok(ExhaustionStep {
        radius: r,
        crossings: sign as i64 * raw,
        estimate: sign * raw as f64 * scale,
        discrepancy_bound: slack * scale,
    })
}

/// Integers in the half-open interval `[lo, hi)`.
fn lattice_count(lo: f64, hi: f64) -> i64 {
    if hi <= lo {
        return 0;
    }
    (hi.ceil() - lo.ceil()) as i64
}

/// Crossings of two sloped windows by periodic chart copy: copy `p` shifts
/// the second window by `p` in the base, and the chart difference is
/// affine on the overlap, so its lattice hits count exactly.
fn count_sloped(s1: f64, b1: (f64, f64), s2: f64, b2: (f64, f64), r: f64) -> (i64, usize, f64, f64) {
    let h1 = r / (1.0 + s1 * s1).sqrt();
    let h2 = r / (1.0 + s2 * s2).sqrt();
    let (a1, e1) = (b1.0 - h1, b1.0 + h1);
    let (a2, e2) = (b2.0 - h2, b2.0 + h2);
    let p_lo = (a1 - e2).floor() as i64 - 1;
    let p_hi = (e1 - a2).ceil() as i64 + 1;
    let slope = s1 - s2;
    let mut raw = 0i64;
    let mut copies = 0usize;
    for p in p_lo..=p_hi {
        let lo = a1.max(a2 + p as f64);
        let hi = e1.min(e2 + p as f64);
        if hi <= lo {
            continue;
        }
        copies += 1;
        let c = b1.1 - s1 * b1.0 - b2.1 + s2 * (b2.0 + p as f64);
        let (ilo, ihi) = (slope * lo + c, slope * hi + c);
        raw += if slope > 0.0 {
            lattice_count(ilo, ihi)
        } else {
            // descending image (ihi, ilo]: negate to keep it half-open left
            lattice_count(-ilo, -ihi)
        };
    }
    (raw, copies, h1, h2)
}

/// Crossings of a sloped window with a vertical one: base hits are the
/// lattice translates of the vertical base inside the sloped window's
/// span, each contributing the lattice hits of the vertical extent.
fn count_vertical(s: f64, bs: (f64, f64), bv: (f64, f64), r: f64) -> (i64, usize, f64) {
    let h = r / (1.0 + s * s).sqrt();
    let (a, e) = (bs.0 - h, bs.0 + h);
    let mut raw = 0i64;
    let mut hits = 0usize;
    let p_lo = (a - bv.0).ceil() as i64;
    let mut p = p_lo;
    while bv.0 + (p as f64) < e {
        let x = bv.0 + p as f64;
        if x >= a {
            hits += 1;
            let d = bs.1 + s * (x - bs.0) - bv.1;
            // vertical half-open extent [bv.1 - r, bv.1 + r)
            raw += lattice_count(d - r, d + r);
        }
        p += 1;
    }
    (raw, hits, h)
}
