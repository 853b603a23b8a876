//! Ruelle-Sullivan currents: pairing a measured solenoid with differential
//! forms, homology class extraction, and homotopy invariance checks.
//!
//! The current of a model is evaluated as a transversal sum: for each
//! cylinder at the working depth, the leaf through the cylinder's
//! representative is integrated over one fundamental window, and the window
//! integrals are combined with the cylinder masses by a fixed-shape pairwise
//! tree, so the result is independent of evaluation order and thread count.
//!
//! Quadrature policy per window: periodic trapezoid when the integrand is a
//! trigonometric form sampled over a compact leaf period (spectral), and
//! composite Gauss-Legendre split at chart knots otherwise. Forms with a
//! compact feature (Thom tubes) additionally cut panels at the tube
//! boundaries and skip panels on which the form vanishes identically.

use rayon::prelude::*;

use crate::cantor::Address;
use crate::error::{Result, SolenoidError};
use crate::forms::{basis_indices, AnyForm, DifferentialForm, MultiIndex};
use crate::model::{CurveWindow, Family, SolenoidModel};
use crate::quad::{periodic_trapezoid, tree_sum, GaussLegendre};

/// Quadrature parameters for current evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Nodes per leaf panel (Gauss-Legendre) or per period (trapezoid).
    pub leaf_order: usize,
    /// Transversal depth; defaults to the model's build depth.
    pub depth: Option<usize>,
    /// Shift of the fundamental window start, in units of the window span.
    /// Different offsets are different fundamental-domain decompositions of
    /// the same current and must agree up to quadrature error.
    pub domain_offset: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            leaf_order: 64,
            depth: None,
            domain_offset: 0.0,
        }
    }
}

impl QuadratureSpec {
    pub fn with_depth(depth: usize) -> Self {
        QuadratureSpec {
            depth: Some(depth),
            ..Default::default()
        }
    }

    pub fn order(mut self, q: usize) -> Self {
        self.leaf_order = q;
        self
    }

    pub fn offset(mut self, s: f64) -> Self {
        self.domain_offset = s;
        self
    }

    pub fn working_depth(&self, m: &SolenoidModel) -> usize {
        self.depth
            .unwrap_or_else(|| m.transversal.depth())
            .min(m.transversal.depth())
    }
}

/// Evaluate the Ruelle-Sullivan current of `m` on a form of degree equal to
/// the leaf dimension.
pub fn evaluate_current(m: &SolenoidModel, form: &AnyForm, quad: &QuadratureSpec) -> Result<f64> {
    if form.dimension() != m.ambient_dim() {
        return Err(SolenoidError::DimensionMismatch {
            expected: m.ambient_dim(),
            got: form.dimension(),
        });
    }
    if form.degree() != m.leaf_dim() {
        return Err(SolenoidError::DegreeMismatch {
            expected: m.leaf_dim(),
            got: form.degree(),
        });
    }
    match &m.family {
        Family::Points { samples } => {
            let mut terms = samples
                .iter()
                .map(|s| {
                    form.evaluate(&s.position, &[])
                        .map(|v| s.sign * s.mass * v)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(tree_sum(&mut terms))
        }
        Family::Linear(d) if m.leaf_dim() == 2 => {
            if matches!(form, AnyForm::Thom(_)) {
                return Err(SolenoidError::Unsupported(
                    "thom evaluation on 2-dimensional leaves".into(),
                ));
            }
            let _ = d;
            let depth = quad.working_depth(m);
            let q = quad.leaf_order.max(4);
            let s = quad.domain_offset;
            let cylinders = m.cylinders_at(depth)?;
            let mut terms = cylinders
                .par_iter()
                .map(|(addr, mass, u)| {
                    let w = m.plane_window(addr, *u)?;
                    let frame: Vec<Vec<f64>> = w.velocity().to_vec();
                    // tensor periodic trapezoid over one compact leaf period
                    let v = periodic_trapezoid(q, |a| {
                        periodic_trapezoid(q, |b| {
                            form.evaluate(&w.point(a + s, b + s), &frame)
                                .unwrap_or(f64::NAN)
                        })
                    });
                    if v.is_nan() {
                        return Err(SolenoidError::Unsupported(
                            "form evaluation failed on a plane window".into(),
                        ));
                    }
                    Ok(mass * v)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(tree_sum(&mut terms))
        }
        _ => {
            let depth = quad.working_depth(m);
            let gl = GaussLegendre::new(quad.leaf_order.max(4));
            let s = quad.domain_offset.rem_euclid(1.0);
            let cylinders = m.cylinders_at(depth)?;
            let mut terms = cylinders
                .par_iter()
                .map(|(addr, mass, u)| {
                    let v = integrate_leaf(m, addr, *u, form, quad, &gl, s)?;
                    Ok(mass * v)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(tree_sum(&mut terms))
        }
    }
}

/// One-window leaf integral for 1-dimensional families, honouring the
/// domain offset. A shifted suspension window crosses the gluing, so it is
/// assembled from the tail of the current window and the head of the
/// return-image window; linear and graph windows extend directly.
fn integrate_leaf(
    m: &SolenoidModel,
    addr: &Address,
    u: f64,
    form: &AnyForm,
    quad: &QuadratureSpec,
    gl: &GaussLegendre,
    s: f64,
) -> Result<f64> {
    if let Family::Suspension(sd) = &m.family {
        let w = m.curve_window(addr, u)?;
        if s == 0.0 {
            return integrate_window(&w, form, quad, gl, w.x_lo, w.x_hi);
        }
        let head = integrate_window(&w, form, quad, gl, w.x_lo + s, w.x_hi)?;
        let image = sd.return_map.apply(addr)?;
        let iu = m.transversal.representative(&image)?;
        let w2 = m.curve_window(&image, iu)?;
        let tail = integrate_window(&w2, form, quad, gl, w2.x_lo, w2.x_lo + s)?;
        Ok(head + tail)
    } else {
        let w = m.curve_window(addr, u)?;
        let span = w.x_hi - w.x_lo;
        if w.periodic && matches!(form, AnyForm::Trig(_)) && w.knots.is_empty() {
            // spectral path: sample one full period (offset is immaterial
            // up to rounding, applied anyway for decomposition tests)
            let lo = w.x_lo + s * span;
            let q = quad.leaf_order.max(4);
            let val = periodic_trapezoid(q, |x| {
                let t = lo + x * span;
                form.evaluate(&w.point(t), &[w.velocity(t)]).unwrap_or(f64::NAN)
            }) * span;
            if val.is_nan() {
                return Err(SolenoidError::Unsupported(
                    "form evaluation failed on a leaf window".into(),
                ));
            }
            return Ok(val);
        }
        integrate_window(&w, form, quad, gl, w.x_lo + s * span, w.x_hi + s * span)
    }
}

/// Composite integral of `form` along a window segment `[lo, hi]`, split at
/// chart knots and at compact-support boundaries of the form.
fn integrate_window(
    w: &CurveWindow,
    form: &AnyForm,
    quad: &QuadratureSpec,
    gl: &GaussLegendre,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if !(hi > lo) {
        return Ok(0.0);
    }
    // A single normal coordinate moving affinely along the window admits the
    // exact cumulative-profile integral; the wedge factor is the same slope.
    if let AnyForm::Thom(t) = form {
        if let [j] = t.normal_coordinates() {
            if let Some((a, b)) = w.axis_affine(*j) {
                return Ok(t.affine_line_integral(a, b, lo, hi));
            }
        }
    }
    let mut cuts: Vec<f64> = vec![lo, hi];
    for &k in &w.knots {
        if lo < k && k < hi {
            cuts.push(k);
        }
    }
    // Tube support of a Thom form: panels outside every normal tube vanish.
    let mut keep: Option<Vec<(f64, f64)>> = None;
    let mut fallback_scale: Option<f64> = None;
    if let AnyForm::Thom(t) = form {
        for (&j, &c) in t
            .normal_coordinates()
            .iter()
            .zip(t.centers())
        {
            let rho = t.rho();
            match w.axis_affine(j) {
                Some((a, 0.0)) => {
                    let mut d = a - c;
                    d -= d.round();
                    if d.abs() >= rho {
                        return Ok(0.0);
                    }
                    // constant nonzero factor: no cuts needed
                }
                Some((a, b)) => {
                    let (vlo, vhi) = if b > 0.0 {
                        (a + b * lo, a + b * hi)
                    } else {
                        (a + b * hi, a + b * lo)
                    };
                    let k_lo = (vlo - c - rho).floor() as i64;
                    let k_hi = (vhi - c + rho).ceil() as i64;
                    let mut axis_keep = Vec::new();
                    for k in k_lo..=k_hi {
                        let y0 = c - rho + k as f64;
                        let y1 = c + rho + k as f64;
                        let (mut x0, mut x1) = ((y0 - a) / b, (y1 - a) / b);
                        if x0 > x1 {
                            std::mem::swap(&mut x0, &mut x1);
                        }
                        let x0 = x0.max(lo);
                        let x1 = x1.min(hi);
                        if x0 < x1 {
                            axis_keep.push((x0, x1));
                            cuts.push(x0);
                            cuts.push(x1);
                        }
                    }
                    if axis_keep.is_empty() {
                        return Ok(0.0);
                    }
                    keep = Some(match keep {
                        None => axis_keep,
                        Some(prev) => intersect_ranges(&prev, &axis_keep),
                    });
                    if keep.as_ref().unwrap().is_empty() {
                        return Ok(0.0);
                    }
                }
                None => {
                    // nonlinear coordinate under the tube: refine uniformly
                    fallback_scale = Some(match fallback_scale {
                        None => rho,
                        Some(r) => r.min(rho),
                    });
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut segments: Vec<(f64, f64)> = Vec::new();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a < 1e-15 {
            continue;
        }
        if let Some(kr) = &keep {
            let mid = 0.5 * (a + b);
            if !kr.iter().any(|&(x0, x1)| x0 <= mid && mid <= x1) {
                continue;
            }
        }
        if let Some(rho) = fallback_scale {
            let pieces = (((b - a) / rho * 4.0).ceil() as usize).clamp(1, 4096);
            let h = (b - a) / pieces as f64;
            for i in 0..pieces {
                segments.push((a + i as f64 * h, a + (i + 1) as f64 * h));
            }
        } else {
            segments.push((a, b));
        }
    }
    let _ = quad;
    let mut vals = Vec::with_capacity(segments.len());
    for (a, b) in segments {
        let mut bad = false;
        let v = gl.integrate(a, b, |x| {
            match form.evaluate(&w.point(x), &[w.velocity(x)]) {
                Ok(y) => y,
                Err(_) => {
                    bad = true;
                    0.0
                }
            }
        });
        if bad {
            return Err(SolenoidError::Unsupported(
                "form evaluation failed on a leaf window".into(),
            ));
        }
        vals.push(v);
    }
    Ok(tree_sum(&mut vals))
}

fn intersect_ranges(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if lo < hi {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// Multi-indices of the class coefficients of `m`, in basis order.
pub fn class_indices(m: &SolenoidModel) -> Vec<MultiIndex> {
    basis_indices(m.ambient_dim(), m.leaf_dim())
}

/// Homology class of the current: coefficients against the constant forms
/// `dx_I` in `basis_indices(n, k)` order.
pub fn rs_class(m: &SolenoidModel, quad: &QuadratureSpec) -> Result<Vec<f64>> {
    let n = m.ambient_dim();
    let k = m.leaf_dim();
    basis_indices(n, k)
        .iter()
        .map(|idx| {
            let f = AnyForm::Trig(DifferentialForm::constant(n, idx, 1.0));
            evaluate_current(m, &f, quad)
        })
        .collect()
}

/// Largest coefficient difference between two class vectors.
pub fn class_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Sign of the permutation `(I, I^c)` of `(0..n)`, `I` strictly increasing.
pub fn shuffle_sign(index: &[usize], n: usize) -> f64 {
    let complement: Vec<usize> = (0..n).filter(|i| !index.contains(i)).collect();
    let mut seq: Vec<usize> = index.to_vec();
    seq.extend(complement);
    let mut sign = 1.0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                sign = -sign;
            }
        }
    }
    sign
}

fn complement(index: &[usize], n: usize) -> Vec<usize> {
    (0..n).filter(|i| !index.contains(i)).collect()
}

/// Cup-product pairing of complementary-degree classes on the n-torus:
/// sum over I of sign(I, I^c) c1[I] c2[I^c]. For unit-mass linear models
/// this is the determinant pairing of the direction data.
pub fn poincare_dual_pairing(c1: &[f64], c2: &[f64], n: usize, k1: usize) -> Result<f64> {
    let idx1 = basis_indices(n, k1);
    let idx2 = basis_indices(n, n - k1);
    if c1.len() != idx1.len() || c2.len() != idx2.len() {
        return Err(SolenoidError::DegreeMismatch {
            expected: idx1.len(),
            got: c1.len(),
        });
    }
    let mut terms = Vec::with_capacity(idx1.len());
    for (i, index) in idx1.iter().enumerate() {
        let comp = complement(index, n);
        let pos = idx2
            .iter()
            .position(|j| *j == comp)
            .expect("complement present in the dual basis");
        terms.push(shuffle_sign(index, n) * c1[i] * c2[pos]);
    }
    Ok(tree_sum(&mut terms))
}

/// Constant representative of the Poincare dual of a class: the (n-k)-form
/// `sum_I c[I] sign(I, I^c) dx_{I^c}`. Evaluating the dual of one class on
/// the other current reproduces `poincare_dual_pairing` when the second
/// argument's class is extracted with the same basis.
pub fn dual_form(class: &[f64], n: usize, k: usize) -> Result<DifferentialForm> {
    let idx = basis_indices(n, k);
    if class.len() != idx.len() {
        return Err(SolenoidError::DegreeMismatch {
            expected: idx.len(),
            got: class.len(),
        });
    }
    let mut out = DifferentialForm::zero(n, n - k);
    for (i, index) in idx.iter().enumerate() {
        let comp = complement(index, n);
        let coeff = class[i] * shuffle_sign(index, n);
        if coeff != 0.0 {
            out.add_component(
                &comp,
                crate::forms::TrigPoly::constant(n, coeff),
            );
        }
    }
    Ok(out)
}

/// |<C, d(beta)>| for a form of degree one less than the leaf dimension.
/// Zero for closed currents; the residual is pure quadrature error.
pub fn stokes_residual(
    m: &SolenoidModel,
    beta: &DifferentialForm,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if beta.degree() + 1 != m.leaf_dim() {
        return Err(SolenoidError::DegreeMismatch {
            expected: m.leaf_dim().saturating_sub(1),
            got: beta.degree(),
        });
    }
    let d = beta.exterior_derivative();
    Ok(evaluate_current(m, &AnyForm::Trig(d), quad)?.abs())
}

/// Class drift along an ambient homotopy: the immersion condition is sampled
/// at five times, and the classes at times 0 and 1 are compared coefficient
/// by coefficient. Closed currents have homotopy-invariant classes, so the
/// drift measures numerical error only.
pub fn homotopy_drift(
    m: &SolenoidModel,
    h: &crate::model::Homotopy,
    quad: &QuadratureSpec,
) -> Result<f64> {
    for step in 0..=4 {
        let t = step as f64 / 4.0;
        let mt = m.at_time(h, t)?;
        let margin = mt.immersion_margin(100)?;
        if margin <= 1e-9 {
            return Err(SolenoidError::Immersion(format!(
                "homotopy degenerates the leaf frame at time {t} (margin {margin:.3e})"
            )));
        }
    }
    let c0 = rs_class(&m.at_time(h, 0.0)?, quad)?;
    let c1 = rs_class(&m.at_time(h, 1.0)?, quad)?;
    Ok(class_distance(&c0, &c1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{MeasureKind, ReturnMap, TransversalKind};
    use crate::forms::{frame_minor, ThomForm, TrigPoly};
    use crate::model::{
        AmbientManifold, FiberEmbedding, Homotopy, LinearDirections, Profile,
    };
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn full_interval(depth: usize, total: f64) -> crate::cantor::CantorTransversal {
        crate::cantor::CantorTransversal::build(
            TransversalKind::FullInterval,
            depth,
            MeasureKind::LebesgueRestricted,
            total,
        )
        .unwrap()
    }

    fn thin_cantor(depth: usize) -> crate::cantor::CantorTransversal {
        crate::cantor::CantorTransversal::build(
            TransversalKind::MiddleCantor { ratio: 0.6 },
            depth,
            MeasureKind::Bernoulli { p: 0.5 },
            1.0,
        )
        .unwrap()
    }

    fn kronecker(alpha: f64, depth: usize) -> SolenoidModel {
        let total = 1.0 / (1.0 + alpha * alpha).sqrt();
        SolenoidModel::linear(
            AmbientManifold::Torus { n: 2 },
            LinearDirections::Slope(alpha),
            vec![0.0, 0.0],
            full_interval(depth, total),
            FiberEmbedding::new(1, 0.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    fn suspension(depth: usize) -> SolenoidModel {
        SolenoidModel::suspension(
            thin_cantor(depth),
            ReturnMap::Odometer,
            FiberEmbedding::new(1, 0.1, 0.9).unwrap(),
        )
        .unwrap()
    }

    fn wavy_graph(depth: usize) -> SolenoidModel {
        SolenoidModel::graph(
            AmbientManifold::Torus { n: 2 },
            Profile::Trig(TrigPoly::harmonic(1, &[1], 0.03, 0.02)),
            thin_cantor(depth),
            FiberEmbedding::new(1, 0.15, 0.35).unwrap(),
        )
        .unwrap()
    }

    fn random_one_form(rng: &mut ChaCha8Rng) -> DifferentialForm {
        let mut f = DifferentialForm::zero(2, 1);
        for idx in [[0usize], [1usize]] {
            let mut coeff = TrigPoly::zero(2);
            for _ in 0..3 {
                let freq = [rng.random_range(-3..=3), rng.random_range(-3..=3)];
                let a = rng.random_range(-64i32..=64) as f64 / 128.0;
                let b = rng.random_range(-64i32..=64) as f64 / 128.0;
                coeff.add_assign(&TrigPoly::harmonic(2, &freq, a, b));
            }
            f.add_component(&idx, coeff);
        }
        f
    }

    #[test]
    fn kronecker_class_is_unit_direction() {
        let alpha = std::f64::consts::SQRT_2 - 1.0;
        let m = kronecker(alpha, 8);
        let c = rs_class(&m, &QuadratureSpec::default()).unwrap();
        let norm = (1.0 + alpha * alpha).sqrt();
        assert_abs_diff_eq!(c[0], 1.0 / norm, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], alpha / norm, epsilon = 1e-12);
    }

    #[test]
    fn kronecker_current_is_lebesgue_on_random_forms() {
        // With product-Lebesgue masses the current of a dense Kronecker line
        // integrates a form over the whole torus in the direction u: the
        // value is the mean of the coefficient of each dx_i times u_i.
        let alpha = std::f64::consts::SQRT_2 - 1.0;
        let m = kronecker(alpha, 8);
        let norm = (1.0 + alpha * alpha).sqrt();
        let u = [1.0 / norm, alpha / norm];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let quad = QuadratureSpec::default();
        for _ in 0..20 {
            let beta = random_one_form(&mut rng);
            let expected = beta
                .components()
                .map(|(idx, c)| c.mean() * u[idx[0]])
                .sum::<f64>();
            let got = evaluate_current(&m, &AnyForm::Trig(beta), &quad).unwrap();
            assert_abs_diff_eq!(got, expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn horizontal_cantor_circles_have_trivial_class() {
        let m = SolenoidModel::linear(
            AmbientManifold::Torus { n: 2 },
            LinearDirections::Integer(vec![vec![1, 0]]),
            vec![0.0, 0.0],
            thin_cantor(8),
            FiberEmbedding::new(1, 0.15, 0.35).unwrap(),
        )
        .unwrap();
        let c = rs_class(&m, &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(c[0], 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(c[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn suspension_class_collapses_to_the_base_circle() {
        // balanced Bernoulli masses are odometer-invariant, so the fiber
        // displacements telescope to zero exactly
        let m = suspension(8);
        let c = rs_class(&m, &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(c[0], 1.0, epsilon = 1e-12);
        assert!(c[1].abs() < 1e-12, "fiber class leaked: {}", c[1]);
    }

    #[test]
    fn t4_plane_class_is_mass_times_integer_minors() {
        let m = SolenoidModel::linear(
            AmbientManifold::Torus { n: 4 },
            LinearDirections::Integer(vec![vec![1, 0, 0, 0], vec![0, 1, 0, -1]]),
            vec![0.0; 4],
            full_interval(4, 0.75),
            FiberEmbedding::new(2, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let c = rs_class(&m, &QuadratureSpec::default()).unwrap();
        // minors over [01],[02],[03],[12],[13],[23]
        let expected = [0.75, 0.0, -0.75, 0.0, 0.0, 0.0];
        for (got, want) in c.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn stokes_residual_is_tiny_on_all_families() {
        let alpha = std::f64::consts::SQRT_2 - 1.0;
        let models = [kronecker(alpha, 8), suspension(8), wavy_graph(8)];
        let beta = DifferentialForm::from_component(
            2,
            &[],
            TrigPoly::harmonic(2, &[2, 3], 0.4, -0.3),
        );
        let quad = QuadratureSpec::default();
        for m in &models {
            let r = stokes_residual(m, &beta, &quad).unwrap();
            assert!(r < 1e-9, "stokes residual {r}");
        }
    }

    #[test]
    fn decomposition_offset_leaves_the_current_unchanged() {
        let alpha = std::f64::consts::SQRT_2 - 1.0;
        let models = [kronecker(alpha, 8), suspension(8), wavy_graph(8)];
        let beta = random_one_form(&mut ChaCha8Rng::seed_from_u64(3));
        for m in &models {
            let a = evaluate_current(
                m,
                &AnyForm::Trig(beta.clone()),
                &QuadratureSpec::default(),
            )
            .unwrap();
            let b = evaluate_current(
                m,
                &AnyForm::Trig(beta.clone()),
                &QuadratureSpec::default().offset(0.3),
            )
            .unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn laplace_expansion_matches_dual_pairing() {
        // sum_I sign(I, I^c) minor_I(A) minor_{I^c}(B) = det[A | B]
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..4).map(|_| rng.random_range(-3..=3) as f64).collect())
                .collect();
            let b: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..4).map(|_| rng.random_range(-3..=3) as f64).collect())
                .collect();
            let idx = basis_indices(4, 2);
            let ca: Vec<f64> = idx.iter().map(|i| frame_minor(&a, i)).collect();
            let cb: Vec<f64> = idx.iter().map(|i| frame_minor(&b, i)).collect();
            let paired = poincare_dual_pairing(&ca, &cb, 4, 2).unwrap();
            // 4x4 determinant with columns a0 a1 b0 b1
            let cols = [&a[0], &a[1], &b[0], &b[1]];
            let det = det4(&cols);
            assert_abs_diff_eq!(paired, det, epsilon = 1e-9);
        }
    }

    fn det4(cols: &[&Vec<f64>; 4]) -> f64 {
        let mut m = [[0.0f64; 4]; 4];
        for (j, c) in cols.iter().enumerate() {
            for i in 0..4 {
                m[i][j] = c[i];
            }
        }
        let mut det = 0.0;
        for j in 0..4 {
            let mut sub = [[0.0f64; 3]; 3];
            for (r, row) in m.iter().enumerate().skip(1) {
                let mut cc = 0;
                for jj in 0..4 {
                    if jj == j {
                        continue;
                    }
                    sub[r - 1][cc] = row[jj];
                    cc += 1;
                }
            }
            let d3 = sub[0][0] * (sub[1][1] * sub[2][2] - sub[1][2] * sub[2][1])
                - sub[0][1] * (sub[1][0] * sub[2][2] - sub[1][2] * sub[2][0])
                + sub[0][2] * (sub[1][0] * sub[2][1] - sub[1][1] * sub[2][0]);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            det += sign * m[0][j] * d3;
        }
        det
    }

    #[test]
    fn dual_form_reproduces_the_pairing_through_the_current() {
        let alpha = std::f64::consts::SQRT_2 - 1.0;
        let beta = 3f64.sqrt() - 1.0;
        let m1 = kronecker(alpha, 8);
        let m2 = kronecker(beta, 8);
        let quad = QuadratureSpec::default();
        let c1 = rs_class(&m1, &quad).unwrap();
        let c2 = rs_class(&m2, &quad).unwrap();
        let via_classes = poincare_dual_pairing(&c1, &c2, 2, 1).unwrap();
        let dual = dual_form(&c1, 2, 1).unwrap();
        let via_current = evaluate_current(&m2, &AnyForm::Trig(dual), &quad).unwrap();
        assert_abs_diff_eq!(via_classes, via_current, epsilon = 1e-10);
        let analytic = (beta - alpha)
            / ((1.0 + alpha * alpha) * (1.0 + beta * beta)).sqrt();
        assert_abs_diff_eq!(via_classes, analytic, epsilon = 1e-12);
    }

    #[test]
    fn dual_pairing_is_antisymmetric_on_t2() {
        let c1 = [0.3, -0.7];
        let c2 = [0.45, 0.2];
        let ab = poincare_dual_pairing(&c1, &c2, 2, 1).unwrap();
        let ba = poincare_dual_pairing(&c2, &c1, 2, 1).unwrap();
        assert_eq!(ab.to_bits(), (-ba).to_bits());
    }

    #[test]
    fn thom_current_counts_cantor_circles() {
        // horizontal Cantor circles against a vertical tube: each leaf
        // crosses once and the bump integrates to one, at every width
        let m = SolenoidModel::linear(
            AmbientManifold::Torus { n: 2 },
            LinearDirections::Integer(vec![vec![1, 0]]),
            vec![0.0, 0.0],
            thin_cantor(8),
            FiberEmbedding::new(1, 0.15, 0.35).unwrap(),
        )
        .unwrap();
        let quad = QuadratureSpec::default();
        for rho in [0.125, 1.0 / 64.0, 1.0 / 512.0] {
            let tau = ThomForm::new(2, &[0], &[1.0 / 3.0], rho).unwrap();
            let v = evaluate_current(&m, &AnyForm::Thom(tau), &quad).unwrap();
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn thom_tube_straddling_zero_is_found_by_wrapping() {
        let m = kronecker(std::f64::consts::SQRT_2 - 1.0, 6);
        let quad = QuadratureSpec::default();
        let tau = ThomForm::new(2, &[0], &[0.002], 0.01).unwrap();
        let v = evaluate_current(&m, &AnyForm::Thom(tau), &quad).unwrap();
        let expected = 1.0 / (1.0 + (std::f64::consts::SQRT_2 - 1.0).powi(2)).sqrt();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-9);
    }

    #[test]
    fn homotopy_drift_is_quadrature_noise() {
        let m = wavy_graph(8);
        let quad = QuadratureSpec::default();
        for h in [
            Homotopy::Translation { v: vec![0.1, 0.2] },
            Homotopy::Bump {
                amplitude: 0.05,
                frequency: 2,
            },
            Homotopy::Shear {
                amplitude: 0.04,
                frequency: 1,
            },
        ] {
            let d = homotopy_drift(&m, &h, &quad).unwrap();
            assert!(d < 1e-8, "drift {d} under {h:?}");
        }
    }

    #[test]
    fn degree_mismatch_is_reported() {
        let m = kronecker(0.3, 4);
        let f = AnyForm::Trig(DifferentialForm::constant(2, &[0, 1], 1.0));
        assert!(matches!(
            evaluate_current(&m, &f, &QuadratureSpec::default()),
            Err(SolenoidError::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn points_current_sums_signed_masses() {
        use crate::model::PointSample;
        let samples = vec![
            PointSample {
                address: Address::parse("0").unwrap(),
                position: vec![0.25, 0.5],
                mass: 0.5,
                sign: 1.0,
            },
            PointSample {
                address: Address::parse("1").unwrap(),
                position: vec![0.75, 0.5],
                mass: 0.5,
                sign: -1.0,
            },
        ];
        let m = SolenoidModel::points(AmbientManifold::Torus { n: 2 }, samples).unwrap();
        let f = AnyForm::Trig(DifferentialForm::constant(2, &[], 1.0));
        let v = evaluate_current(&m, &f, &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        let g = AnyForm::Trig(DifferentialForm::from_component(
            2,
            &[],
            TrigPoly::harmonic(2, &[1, 0], 1.0, 0.0),
        ));
        let v2 = evaluate_current(&m, &g, &QuadratureSpec::default()).unwrap();
        // cos(2 pi /4) = 0, cos(2 pi 3/4) = 0
        assert_abs_diff_eq!(v2, 0.0, epsilon = 1e-15);
    }
}
