//! Crossing enumeration between leaf windows.
//!
//! Three solvers, dispatched by window shape: an exact arithmetic route for
//! pairs of affine windows (lines, horizontal circles, flat suspension
//! arcs), a seam-cut sampled root finder for anything with a genuine
//! profile, and an integer lattice solve for pairs of 2-dimensional plaques
//! on T^4. The sampled route refines interior extrema before trusting
//! them, so pairs of nearby roots inside one grid cell are found and true
//! tangencies are reported as tangential records rather than dropped.

use crate::cantor::Address;
use crate::error::{Result, SolenoidError};
use crate::model::{AmbientManifold, CurveWindow, PlaneWindow, SolenoidModel};

use super::{crossing_data, det_rows, IntersectionRecord};

const ROOT_TOL: f64 = 1e-13;
const DEDUPE_TOL: f64 = 1e-10;

/// One crossing of two parametrised windows.
#[derive(Debug, Clone)]
pub(crate) struct Crossing {
    /// Window parameter of the crossing on the first factor.
    pub t1: f64,
    pub point: Vec<f64>,
    pub sign: f64,
    pub margin: f64,
    pub tangential: bool,
}

impl Crossing {
    pub fn into_record(self, c1: Address, c2: Address) -> IntersectionRecord {
        IntersectionRecord {
            cylinder1: c1,
            cylinder2: c2,
            point: self.point,
            sign: self.sign,
            margin: self.margin,
            tangential: self.tangential,
        }
    }
}

fn wrap01(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r == 1.0 {
        0.0
    } else {
        r
    }
}

/// Affine description of a window: ambient x = a0 + t, y = y0 + slope * t.
struct AffineWindow {
    a0: f64,
    y0: f64,
    slope: f64,
}

fn as_affine(w: &CurveWindow) -> Option<AffineWindow> {
    match (w.axis_affine(0), w.axis_affine(1)) {
        (Some((a0, dx)), Some((y0, slope))) if dx == 1.0 => Some(AffineWindow { a0, y0, slope }),
        _ => None,
    }
}

/// Vertical description: ambient x = c, y = y0 + dy * t with |dy| >= 1.
struct VerticalWindow {
    c: f64,
    y0: f64,
    dy: f64,
}

fn as_vertical(w: &CurveWindow) -> Option<VerticalWindow> {
    match (w.axis_affine(0), w.axis_affine(1)) {
        (Some((c, dx)), Some((y0, dy))) if dx == 0.0 && dy != 0.0 => {
            Some(VerticalWindow { c, y0, dy })
        }
        _ => None,
    }
}

fn is_x_graph(w: &CurveWindow) -> bool {
    matches!(w.axis_affine(0), Some((_, dx)) if dx == 1.0)
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    v.iter().map(|c| c / n).collect()
}

fn crossing_at(w1: &CurveWindow, w2: &CurveWindow, t1: f64, t2: f64, torus: bool) -> Crossing {
    let v1 = unit(&w1.velocity(t1));
    let v2 = unit(&w2.velocity(t2));
    let (sign, margin) = crossing_data(&[v1], &[v2]);
    let mut point = w1.point(t1);
    if torus {
        for c in point.iter_mut() {
            *c = wrap01(*c);
        }
    }
    let tangential = margin < 1e-9;
    Crossing {
        t1,
        point,
        sign: if tangential { 0.0 } else { sign },
        margin,
        tangential,
    }
}

/// All transversal crossings of two one-period leaf windows.
pub(crate) fn window_crossings(
    w1: &CurveWindow,
    w2: &CurveWindow,
    ambient: &AmbientManifold,
) -> Result<Vec<Crossing>> {
    let torus = ambient.is_torus();
    match (as_vertical(w1), as_vertical(w2)) {
        (Some(v1), Some(v2)) => return vertical_pair(w1, w2, &v1, &v2, torus),
        (Some(v), None) if is_x_graph(w2) => {
            return vertical_vs_graph(w2, w1, &v, torus, false);
        }
        (None, Some(v)) if is_x_graph(w1) => {
            return vertical_vs_graph(w1, w2, &v, torus, true);
        }
        _ => {}
    }
    if !is_x_graph(w1) || !is_x_graph(w2) {
        return Err(SolenoidError::Unsupported(
            "crossing enumeration needs graph-like or vertical windows".into(),
        ));
    }
    if let (Some(a1), Some(a2)) = (as_affine(w1), as_affine(w2)) {
        if torus {
            return affine_pair_torus(w1, w2, &a1, &a2);
        }
    }
    scan_pair(w1, w2, torus)
}

/// Two vertical windows: parallel leaves, crossings only on coincidence.
fn vertical_pair(
    w1: &CurveWindow,
    w2: &CurveWindow,
    v1: &VerticalWindow,
    v2: &VerticalWindow,
    torus: bool,
) -> Result<Vec<Crossing>> {
    let coincide = if torus {
        let d = (v1.c - v2.c).rem_euclid(1.0);
        d < DEDUPE_TOL || d > 1.0 - DEDUPE_TOL
    } else {
        (v1.c - v2.c).abs() < DEDUPE_TOL
    };
    if !coincide {
        return Ok(vec![]);
    }
    let mut c = crossing_at(w1, w2, 0.0, 0.0, torus);
    c.tangential = true;
    c.margin = 0.0;
    c.sign = 0.0;
    Ok(vec![c])
}

/// Vertical window against an x-graph window: crossings at x = c, one per
/// fiber revolution of the vertical window.
fn vertical_vs_graph(
    graph: &CurveWindow,
    vert_w: &CurveWindow,
    v: &VerticalWindow,
    torus: bool,
    graph_first: bool,
) -> Result<Vec<Crossing>> {
    let a0 = graph.axis_affine(0).unwrap().0;
    let t_g = if torus {
        wrap01(v.c - a0)
    } else {
        let t = v.c - a0;
        if t < graph.x_lo || t >= graph.x_hi {
            return Ok(vec![]);
        }
        t
    };
    let y = graph.point(t_g)[1];
    let mut out = Vec::new();
    if torus {
        // On the torus a vertical window is an integer circle: |dy| fiber
        // revolutions, one crossing per revolution. Place each by its exact
        // fractional position so a crossing at the fiber seam (wrapped
        // height within one ulp of 0 or 1) cannot be lost to rounding.
        let winds = v.dy.abs().round().max(1.0);
        let z0 = if v.dy > 0.0 {
            wrap01(y - v.y0)
        } else {
            wrap01(v.y0 - y)
        };
        let mut m = 0.0;
        while m < winds {
            let t = ((z0 + m) / winds).min(1.0f64.next_down());
            let c = if graph_first {
                crossing_at(graph, vert_w, t_g, t, torus)
            } else {
                crossing_at(vert_w, graph, t, t_g, torus)
            };
            out.push(c);
            m += 1.0;
        }
    } else {
        let t = (y - v.y0) / v.dy;
        if (vert_w.x_lo..vert_w.x_hi).contains(&t) {
            out.push(if graph_first {
                crossing_at(graph, vert_w, t_g, t, torus)
            } else {
                crossing_at(vert_w, graph, t, t_g, torus)
            });
        }
    }
    Ok(out)
}

/// Exact crossing enumeration for two affine windows on the torus.
fn affine_pair_torus(
    w1: &CurveWindow,
    w2: &CurveWindow,
    a1: &AffineWindow,
    a2: &AffineWindow,
) -> Result<Vec<Crossing>> {
    let d = a1.slope - a2.slope;
    if d == 0.0 {
        // parallel: tangential overlap when the lines coincide mod 1
        let off = (a1.y0 - a1.slope * a1.a0) - (a2.y0 - a2.slope * a2.a0);
        let r = off.rem_euclid(1.0);
        if r < DEDUPE_TOL || r > 1.0 - DEDUPE_TOL {
            let mut c = crossing_at(w1, w2, 0.0, 0.0, true);
            c.tangential = true;
            c.margin = 0.0;
            c.sign = 0.0;
            return Ok(vec![c]);
        }
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    // x-identification: a0_1 + t1 = a0_2 + t2 + p
    let cbase = a1.a0 - a2.a0;
    let p_lo = (cbase - 1.0).ceil() as i64;
    let p_hi = (cbase + 1.0).floor() as i64 + 1;
    for p in p_lo..=p_hi {
        let cp = cbase - p as f64; // t2 = t1 + cp
        let t1_lo = (-cp).max(0.0);
        let t1_hi = (1.0 - cp).min(1.0);
        if t1_lo >= t1_hi {
            continue;
        }
        // y: y0_1 + s1 t1 = y0_2 + s2 (t1 + cp) + q  =>  d t1 = rhs0 + q
        let rhs0 = a2.y0 + a2.slope * cp - a1.y0;
        let (glo, ghi) = if d > 0.0 {
            (d * t1_lo - rhs0, d * t1_hi - rhs0)
        } else {
            (d * t1_hi - rhs0, d * t1_lo - rhs0)
        };
        let mut q = (glo - 1e-9).ceil();
        while q < ghi + 1e-9 {
            let t1 = (rhs0 + q) / d;
            if t1 >= t1_lo && t1 < t1_hi {
                out.push(crossing_at(w1, w2, t1, t1 + cp, true));
            }
            q += 1.0;
        }
    }
    Ok(out)
}

/// Sampled root finder over the window pair's common base domain, cut at
/// seams and knots, scanning every integer sheet the difference reaches.
fn scan_pair(w1: &CurveWindow, w2: &CurveWindow, torus: bool) -> Result<Vec<Crossing>> {
    let a01 = w1.axis_affine(0).unwrap().0;
    let a02 = w2.axis_affine(0).unwrap().0;
    let (dom_lo, dom_hi) = if torus {
        (0.0, 1.0)
    } else {
        let lo = w1.x_lo.max(w2.x_lo);
        let hi = w1.x_hi.min(w2.x_hi);
        if lo >= hi {
            return Ok(vec![]);
        }
        (lo, hi)
    };
    // param maps: t_i(x) = x - a0_i, wrapped into the window on the torus
    let t_of = |x: f64, a0: f64, w: &CurveWindow| -> f64 {
        if torus && !w.periodic {
            wrap01(x - a0)
        } else {
            x - a0
        }
    };
    let f = |x: f64| -> f64 {
        let y1 = w1.point(t_of(x, a01, w1))[1];
        let y2 = w2.point(t_of(x, a02, w2))[1];
        y1 - y2
    };
    // cut the domain at parametrisation seams and smoothness knots
    let mut cuts = vec![dom_lo, dom_hi];
    if torus {
        for (w, a0) in [(w1, a01), (w2, a02)] {
            if !w.periodic {
                cuts.push(wrap01(a0));
            }
            for k in &w.knots {
                cuts.push(wrap01(a0 + k));
            }
        }
    } else {
        for w in [w1, w2] {
            for k in &w.knots {
                if (dom_lo..dom_hi).contains(k) {
                    cuts.push(*k);
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let mut out: Vec<Crossing> = Vec::new();
    let push_root = |x: f64, out: &mut Vec<Crossing>, tangential: bool| {
        for c in out.iter() {
            let prev = c.t1 + a01;
            let dx = if torus {
                let r = (x - prev).rem_euclid(1.0);
                r.min(1.0 - r)
            } else {
                (x - prev).abs()
            };
            if dx < DEDUPE_TOL {
                return;
            }
        }
        let mut c = crossing_at(
            w1,
            w2,
            t_of(x, a01, w1),
            t_of(x, a02, w2),
            torus,
        );
        c.tangential = c.tangential || tangential;
        if tangential {
            c.sign = 0.0;
        }
        out.push(c);
    };

    for seg in cuts.windows(2) {
        let (s, e) = (seg[0], seg[1]);
        let span = e - s;
        if span < 1e-13 {
            continue;
        }
        let n = ((span * 1024.0).ceil() as usize).clamp(8, 4096);
        let h = span / n as f64;
        // samples pulled just inside the half-open segment
        let xs: Vec<f64> = (0..=n)
            .map(|j| {
                let x = s + j as f64 * h;
                if j == n {
                    e - span * 1e-12
                } else {
                    x
                }
            })
            .collect();
        let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let (fmin, fmax) = fs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let sheets: Vec<f64> = if torus {
            let klo = (fmin - 0.5).ceil() as i64;
            let khi = (fmax + 0.5).floor() as i64;
            (klo..=khi).map(|k| k as f64).collect()
        } else {
            vec![0.0]
        };
        for &k in &sheets {
            for j in 0..n {
                let (ga, gb) = (fs[j] - k, fs[j + 1] - k);
                if ga.abs() < ROOT_TOL {
                    push_root(xs[j], &mut out, false);
                    continue;
                }
                if ga * gb < 0.0 {
                    let x = bisect(&f, xs[j], xs[j + 1], k);
                    push_root(x, &mut out, false);
                }
            }
            // interior extrema close to the sheet: a dip can hide a root
            // pair inside one cell, or witness a genuine tangency
            for j in 1..n {
                let (gp, gc, gn) = (fs[j - 1] - k, fs[j] - k, fs[j + 1] - k);
                if gc.abs() > 1e-2 || gp * gc < 0.0 || gc * gn < 0.0 {
                    continue;
                }
                let is_min = gc <= gp && gc <= gn && gc > 0.0;
                let is_max = gc >= gp && gc >= gn && gc < 0.0;
                if !(is_min || is_max) {
                    continue;
                }
                let g = |x: f64| f(x) - k;
                let (xm, gm) = refine_extremum(&g, xs[j - 1], xs[j + 1], is_min);
                if gm.abs() <= ROOT_TOL {
                    push_root(xm, &mut out, true);
                } else if (is_min && gm < 0.0) || (is_max && gm > 0.0) {
                    let xa = bisect(&f, xs[j - 1], xm, k);
                    let xb = bisect(&f, xm, xs[j + 1], k);
                    push_root(xa, &mut out, false);
                    push_root(xb, &mut out, false);
                }
            }
        }
    }
    Ok(out)
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, k: f64) -> f64 {
    let (mut fa, fb) = (f(a) - k, f(b) - k);
    if fa.abs() < ROOT_TOL {
        return a;
    }
    if fb.abs() < ROOT_TOL {
        return b;
    }
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        let fm = f(m) - k;
        if fm.abs() < 1e-15 || (b - a) < 1e-15 {
            return m;
        }
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Golden-section refinement of an interior extremum.
fn refine_extremum(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, minimum: bool) -> (f64, f64) {
    const PHI: f64 = 0.6180339887498949;
    let mut x1 = b - PHI * (b - a);
    let mut x2 = a + PHI * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..80 {
        let keep_left = if minimum { g1 < g2 } else { g1 > g2 };
        if keep_left {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - PHI * (b - a);
            g1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + PHI * (b - a);
            g2 = g(x2);
        }
        if b - a < 1e-14 {
            break;
        }
    }
    let xm = 0.5 * (a + b);
    (xm, g(xm))
}

/// Integer lattice solve for two 2-dimensional plaques on T^4.
pub(crate) fn plane_crossings(w1: &PlaneWindow, w2: &PlaneWindow) -> Result<Vec<Crossing>> {
    let n = w1.start.len();
    if n != 4 || w2.start.len() != 4 {
        return Err(SolenoidError::Unsupported(
            "plaque crossings are implemented on the 4-torus".into(),
        ));
    }
    // columns: [d1_1 d1_2 -d2_1 -d2_2], solve B s = rhs + m over s in [0,1)^4
    let cols: Vec<Vec<f64>> = vec![
        w1.dirs[0].clone(),
        w1.dirs[1].clone(),
        w2.dirs[0].iter().map(|v| -v).collect(),
        w2.dirs[1].iter().map(|v| -v).collect(),
    ];
    let stacked: Vec<Vec<f64>> = (0..4)
        .map(|r| vec![w1.dirs[0][r], w1.dirs[1][r], w2.dirs[0][r], w2.dirs[1][r]])
        .collect();
    let det_dirs = det_rows(&stacked);
    if det_dirs.abs() < 0.5 {
        return Err(SolenoidError::Tangency {
            cylinder: "(plaque pair)".into(),
            reason: "the two plane directions are linearly dependent".into(),
        });
    }
    let rhs: Vec<f64> = (0..4).map(|i| w2.start[i] - w1.start[i]).collect();
    let sign = det_dirs.signum();
    let u1 = w1.unit_frame();
    let u2 = w2.unit_frame();
    let unit_rows: Vec<Vec<f64>> = u1.iter().chain(u2.iter()).cloned().collect();
    let margin = super::sigma_min_rows(&unit_rows);

    let mut ranges = Vec::new();
    for i in 0..4 {
        let lo: f64 = (0..4).map(|j| cols[j][i].min(0.0)).sum();
        let hi: f64 = (0..4).map(|j| cols[j][i].max(0.0)).sum();
        let m_lo = (lo - rhs[i] - 1e-9).ceil() as i64;
        let m_hi = (hi - rhs[i] + 1e-9).floor() as i64;
        ranges.push((m_lo, m_hi));
    }
    let mut out = Vec::new();
    for m0 in ranges[0].0..=ranges[0].1 {
        for m1 in ranges[1].0..=ranges[1].1 {
            for m2 in ranges[2].0..=ranges[2].1 {
                for m3 in ranges[3].0..=ranges[3].1 {
                    let b: Vec<f64> = [m0, m1, m2, m3]
                        .iter()
                        .zip(&rhs)
                        .map(|(&m, &r)| r + m as f64)
                        .collect();
                    let Some(s) = solve4(&cols, &b) else {
                        continue;
                    };
                    if s.iter().all(|&v| (-1e-9..1.0 - 1e-9).contains(&v)) {
                        let mut point = w1.point(s[0].max(0.0), s[1].max(0.0));
                        for c in point.iter_mut() {
                            *c = wrap01(*c);
                        }
                        out.push(Crossing {
                            t1: s[0].max(0.0),
                            point,
                            sign,
                            margin,
                            tangential: false,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gaussian elimination with partial pivoting, 4x4, columns given.
fn solve4(cols: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let mut a = [[0.0f64; 5]; 4];
    for r in 0..4 {
        for c in 0..4 {
            a[r][c] = cols[c][r];
        }
        a[r][4] = b[r];
    }
    for p in 0..4 {
        let piv = (p..4).max_by(|&i, &j| a[i][p].abs().partial_cmp(&a[j][p].abs()).unwrap())?;
        if a[piv][p].abs() < 1e-12 {
            return None;
        }
        a.swap(p, piv);
        for r in (p + 1)..4 {
            let f = a[r][p] / a[p][p];
            for c in p..5 {
                a[r][c] -= f * a[p][c];
            }
        }
    }
    let mut s = [0.0f64; 4];
    for p in (0..4).rev() {
        let mut acc = a[p][4];
        for c in (p + 1)..4 {
            acc -= a[p][c] * s[c];
        }
        s[p] = acc / a[p][p];
    }
    Some(s.to_vec())
}

/// Exact area of {(t1, t2) in I1 x I2 : t1 - t2 + shift in [0, delta) mod 1},
/// the fiber set crossed when sliding one affine window family past another.
/// Piecewise quadratic in the offsets, exact up to roundoff.
pub(crate) fn band_area(i1: (f64, f64), i2: (f64, f64), shift: f64, delta: f64) -> f64 {
    debug_assert!(delta >= 0.0);
    let (w1, w2) = (i1.1 - i1.0, i2.1 - i2.0);
    if w1 <= 0.0 || w2 <= 0.0 || delta == 0.0 {
        return 0.0;
    }
    let d0 = i1.0 - i2.1;
    let dmax = i1.1 - i2.0;
    // cumulative cross-correlation of the two uniform intervals
    let g = |c: f64| -> f64 {
        let u = (c - d0).clamp(0.0, w1 + w2);
        let lo = w1.min(w2);
        let hi = w1.max(w2);
        if u <= lo {
            0.5 * u * u
        } else if u <= hi {
            0.5 * lo * lo + lo * (u - lo)
        } else {
            lo * hi - 0.5 * (lo + hi - u) * (lo + hi - u)
        }
    };
    let k_lo = (-shift - dmax).floor() as i64 - 1;
    let k_hi = (-shift - d0 + delta).ceil() as i64 + 1;
    let mut acc = 0.0;
    for k in k_lo..=k_hi {
        let lo = -shift - k as f64;
        acc += g(lo + delta) - g(lo);
    }
    acc
}

/// All crossings between the depth-d cylinder leaves of two models.
/// Complementary dimensions required; plane pairs on T^4, curve pairs on
/// 2-dimensional ambients.
pub fn find_intersections(
    m1: &SolenoidModel,
    m2: &SolenoidModel,
    depth: usize,
) -> Result<Vec<IntersectionRecord>> {
    if m1.ambient != m2.ambient {
        return Err(SolenoidError::Construction(
            "intersection requires a common ambient manifold".into(),
        ));
    }
    let n = m1.ambient_dim();
    let (k1, k2) = (m1.leaf_dim(), m2.leaf_dim());
    if k1 + k2 != n {
        return Err(SolenoidError::DegreeMismatch {
            expected: n - k1.min(n),
            got: k2,
        });
    }
    if k1 == 0 || k2 == 0 {
        return Err(SolenoidError::Unsupported(
            "crossings of 0-dimensional solenoids are not defined".into(),
        ));
    }
    let d1 = depth.min(m1.transversal.depth());
    let d2 = depth.min(m2.transversal.depth());
    let cyl1 = m1.cylinders_at(d1)?;
    let cyl2 = m2.cylinders_at(d2)?;
    if cyl1.len().saturating_mul(cyl2.len()) > (1 << 20) {
        return Err(SolenoidError::Parameter(format!(
            "cylinder pair count {} x {} exceeds the enumeration budget",
            cyl1.len(),
            cyl2.len()
        )));
    }
    let mut out = Vec::new();
    for (a1, _, u1) in &cyl1 {
        for (a2, _, u2) in &cyl2 {
            let crossings = if k1 == 2 {
                plane_crossings(&m1.plane_window(a1, *u1)?, &m2.plane_window(a2, *u2)?)?
            } else {
                window_crossings(
                    &m1.curve_window(a1, *u1)?,
                    &m2.curve_window(a2, *u2)?,
                    &m1.ambient,
                )?
            };
            out.extend(crossings.into_iter().map(|c| c.into_record(*a1, *a2)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{CantorTransversal, MeasureKind, TransversalKind};
    use crate::forms::TrigPoly;
    use crate::model::{FiberEmbedding, LinearDirections, Profile};

    fn full_interval(depth: usize, mass: f64) -> CantorTransversal {
        CantorTransversal::build(
            TransversalKind::FullInterval,
            depth,
            MeasureKind::LebesgueRestricted,
            mass,
        )
        .unwrap()
    }

    fn torus2() -> AmbientManifold {
        AmbientManifold::Torus { n: 2 }
    }

    fn kronecker(slope: f64, depth: usize) -> SolenoidModel {
        SolenoidModel::linear(
            torus2(),
            LinearDirections::Slope(slope),
            vec![0.0, 0.0],
            full_interval(depth, 1.0),
            FiberEmbedding::new(1, 0.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn affine_crossing_count_matches_the_slope_gap() {
        // lines of slopes a and b through fixed heights: over one x-period
        // the count is |b - a| rounded to a neighbouring integer
        let m1 = kronecker(0.2, 0);
        let m2 = kronecker(3.7, 0);
        let w1 = m1
            .curve_window(&Address::root(), 0.13)
            .unwrap();
        let w2 = m2
            .curve_window(&Address::root(), 0.71)
            .unwrap();
        let cr = window_crossings(&w1, &w2, &torus2()).unwrap();
        let gap = 3.7 - 0.2f64;
        assert!(
            (cr.len() as f64 - gap).abs() <= 1.0,
            "count {} vs slope gap {}",
            cr.len(),
            gap
        );
        for c in &cr {
            assert_eq!(c.sign, 1.0, "slope1 < slope2 crossings are positive");
            assert!(!c.tangential);
        }
    }

    #[test]
    fn affine_route_agrees_with_the_sampled_scanner() {
        let m1 = kronecker(2f64.sqrt() - 1.0, 0);
        let m2 = kronecker(3f64.sqrt() - 1.0, 0);
        for (h1, h2) in [(0.0, 0.5), (0.13, 0.77), (0.9, 0.05)] {
            let w1 = m1.curve_window(&Address::root(), h1).unwrap();
            let w2 = m2.curve_window(&Address::root(), h2).unwrap();
            let exact = affine_pair_torus(&w1, &w2, &as_affine(&w1).unwrap(), &as_affine(&w2).unwrap())
                .unwrap();
            let scanned = scan_pair(&w1, &w2, true).unwrap();
            assert_eq!(exact.len(), scanned.len());
            let mut xe: Vec<f64> = exact.iter().map(|c| wrap01(c.t1)).collect();
            let mut xs: Vec<f64> = scanned.iter().map(|c| wrap01(c.t1)).collect();
            xe.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in xe.iter().zip(&xs) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn horizontal_and_vertical_circles_cross_once_with_margin_one() {
        let horizontal = SolenoidModel::linear(
            torus2(),
            LinearDirections::Integer(vec![vec![1, 0]]),
            vec![0.0, 0.0],
            full_interval(0, 1.0),
            FiberEmbedding::new(1, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let vertical = SolenoidModel::linear(
            torus2(),
            LinearDirections::Integer(vec![vec![0, 1]]),
            vec![0.0, 0.0],
            full_interval(0, 1.0),
            FiberEmbedding::new(0, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let w1 = horizontal.curve_window(&Address::root(), 0.4).unwrap();
        let w2 = vertical.curve_window(&Address::root(), 0.3).unwrap();
        let cr = window_crossings(&w1, &w2, &torus2()).unwrap();
        assert_eq!(cr.len(), 1);
        assert_eq!(cr[0].sign, 1.0);
        assert!((cr[0].margin - 1.0).abs() < 1e-12);
        assert!((cr[0].point[0] - 0.3).abs() < 1e-12);
        assert!((cr[0].point[1] - 0.4).abs() < 1e-12);
        // swapped order flips the sign
        let cr = window_crossings(&w2, &w1, &torus2()).unwrap();
        assert_eq!(cr.len(), 1);
        assert_eq!(cr[0].sign, -1.0);
    }

    #[test]
    fn wavy_graph_crossings_and_signs_cancel_over_a_period() {
        // y = 0.05(1 - cos 2 pi x) + h against a horizontal circle that cuts
        // through the wave: two crossings of opposite sign
        let mut psi = TrigPoly::zero(1);
        psi.add_assign(&TrigPoly::constant(1, 0.05));
        psi.add_assign(&TrigPoly::harmonic(1, &[1], -0.05, 0.0));
        let wavy = SolenoidModel::graph(
            torus2(),
            Profile::Trig(psi),
            full_interval(0, 1.0),
            FiberEmbedding::new(1, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let horizontal = SolenoidModel::linear(
            torus2(),
            LinearDirections::Integer(vec![vec![1, 0]]),
            vec![0.0, 0.0],
            full_interval(0, 1.0),
            FiberEmbedding::new(1, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let ww = wavy.curve_window(&Address::root(), 0.0).unwrap();
        let wh = horizontal.curve_window(&Address::root(), 0.05).unwrap();
        let cr = window_crossings(&ww, &wh, &torus2()).unwrap();
        assert_eq!(cr.len(), 2);
        let total: f64 = cr.iter().map(|c| c.sign).sum();
        assert_eq!(total, 0.0);
        assert!(cr.iter().all(|c| !c.tangential));
        // the wave's crest only touches h = 0.1: a tangency, not a crossing
        let wh = horizontal.curve_window(&Address::root(), 0.1).unwrap();
        let cr = window_crossings(&ww, &wh, &torus2()).unwrap();
        assert_eq!(cr.len(), 1, "single tangential contact at the crest");
        assert!(cr[0].tangential);
    }

    #[test]
    fn near_tangent_root_pair_inside_one_grid_cell_is_found() {
        // crest placed exactly midway between two 1/1024 grid samples, line
        // 3.9e-8 below it: both roots sit inside one cell with no sign
        // change at the samples, so only the extremum refinement sees them
        let phase = std::f64::consts::TAU * 0.5 / 1024.0;
        let mut psi = TrigPoly::zero(1);
        psi.add_assign(&TrigPoly::constant(1, 0.05));
        psi.add_assign(&TrigPoly::harmonic(
            1,
            &[1],
            -0.05 * phase.cos(),
            -0.05 * phase.sin(),
        ));
        let wavy = SolenoidModel::graph(
            torus2(),
            Profile::Trig(psi),
            full_interval(0, 1.0),
            FiberEmbedding::new(1, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let horizontal = SolenoidModel::linear(
            torus2(),
            LinearDirections::Integer(vec![vec![1, 0]]),
            vec![0.0, 0.0],
            full_interval(0, 1.0),
            FiberEmbedding::new(1, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let ww = wavy.curve_window(&Address::root(), 0.0).unwrap();
        let wh = horizontal
            .curve_window(&Address::root(), 0.1 - 3.9e-8)
            .unwrap();
        let cr = window_crossings(&ww, &wh, &torus2()).unwrap();
        assert_eq!(cr.len(), 2, "both near-tangent roots must be recovered");
        let total: f64 = cr.iter().map(|c| c.sign).sum();
        assert_eq!(total, 0.0);
        let dx = (cr[0].point[0] - cr[1].point[0]).abs();
        assert!(dx < 1e-3, "roots are {dx} apart, inside one cell");
    }

    #[test]
    fn band_area_is_additive_over_cylinder_splits() {
        let delta = 0.317;
        let shift = 0.123;
        let whole = band_area((0.0, 1.0), (0.0, 1.0), shift, delta);
        assert!((whole - delta).abs() < 1e-13, "full torus band is delta");
        // split both factors into quarters: total must be unchanged
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let i1 = (i as f64 * 0.25, (i + 1) as f64 * 0.25);
                let i2 = (j as f64 * 0.25, (j + 1) as f64 * 0.25);
                acc += band_area(i1, i2, shift, delta);
            }
        }
        assert!((acc - whole).abs() < 1e-13);
    }

    #[test]
    fn band_area_matches_a_grid_oracle() {
        let i1 = (0.21, 0.46);
        let i2 = (0.58, 0.9);
        let shift = 0.83;
        let delta = 0.4142135623730951;
        let exact = band_area(i1, i2, shift, delta);
        let n = 4000;
        let (h1, h2) = ((i1.1 - i1.0) / n as f64, (i2.1 - i2.0) / n as f64);
        let mut hits = 0u64;
        for a in 0..n {
            let t1 = i1.0 + (a as f64 + 0.5) * h1;
            for b in 0..n {
                let t2 = i2.0 + (b as f64 + 0.5) * h2;
                if (t1 - t2 + shift).rem_euclid(1.0) < delta {
                    hits += 1;
                }
            }
        }
        let approx = hits as f64 * h1 * h2;
        assert!(
            (exact - approx).abs() < 2e-4,
            "exact {exact} vs grid {approx}"
        );
    }

    #[test]
    fn t4_plaque_crossing_count_is_the_direction_determinant() {
        use crate::model::AmbientManifold::Torus;
        let t = |mass| full_interval(0, mass);
        let p1 = SolenoidModel::linear(
            Torus { n: 4 },
            LinearDirections::Integer(vec![vec![1, 0, 0, 0], vec![0, 1, 0, -1]]),
            vec![0.0, 0.0, 0.0, 0.0],
            t(1.0),
            FiberEmbedding::new(2, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let p2 = SolenoidModel::linear(
            Torus { n: 4 },
            LinearDirections::Integer(vec![vec![0, 0, 1, 0], vec![0, 1, 0, 1]]),
            vec![0.1, 0.2, 0.3, 0.4],
            t(1.0),
            FiberEmbedding::new(0, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let w1 = p1.plane_window(&Address::root(), 0.37).unwrap();
        let w2 = p2.plane_window(&Address::root(), 0.64).unwrap();
        let stacked: Vec<Vec<f64>> = (0..4)
            .map(|r| {
                vec![
                    w1.dirs[0][r],
                    w1.dirs[1][r],
                    w2.dirs[0][r],
                    w2.dirs[1][r],
                ]
            })
            .collect();
        let det = det_rows(&stacked);
        let cr = plane_crossings(&w1, &w2).unwrap();
        assert_eq!(cr.len() as f64, det.abs());
        for c in &cr {
            assert_eq!(c.sign, det.signum());
        }
    }
}
