//! Differential forms on flat tori and plane regions.
//!
//! Coefficients are trigonometric polynomials with integer frequency vectors,
//! so exterior derivative and wedge product stay inside the class and are
//! computed on coefficients, not by sampling. A term stores its power of 2*pi
//! separately: differentiation multiplies by the integer frequency and bumps
//! the power, which keeps algebraic identities (d after d = 0, Leibniz,
//! anticommutativity) exact whenever the underlying rational coefficients are
//! exactly representable.
//!
//! The one non-trigonometric form kind is the Thom form of a coordinate
//! subtorus: a product of compactly supported bump profiles in the normal
//! coordinates times the normal volume element. It is evaluated pointwise
//! through a sampled spline profile and is closed for analytic reasons (its
//! coefficient depends only on coordinates whose differentials the form
//! already contains), which `exterior_derivative` reports as an exactly zero
//! form.

use crate::error::{Result, SolenoidError};
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

/// Strictly increasing list of coordinate indices (0-based).
pub type MultiIndex = Vec<usize>;

/// Key of one trigonometric term: frequency vector and power of 2*pi.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct TermKey {
    freq: Vec<i32>,
    tau_power: u8,
}

/// Trigonometric polynomial in `n` variables:
/// sum over terms of `(2*pi)^p * (a cos(2*pi f.x) + b sin(2*pi f.x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    n: usize,
    terms: BTreeMap<TermKey, (f64, f64)>,
}

impl TrigPoly {
    pub fn zero(n: usize) -> Self {
        TrigPoly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = TrigPoly::zero(n);
        p.add_term(&vec![0; n], 0, c, 0.0);
        p
    }

    /// Single term `a cos(2 pi f.x) + b sin(2 pi f.x)`.
    pub fn harmonic(n: usize, freq: &[i32], a: f64, b: f64) -> Self {
        assert_eq!(freq.len(), n);
        let mut p = TrigPoly::zero(n);
        p.add_term(freq, 0, a, b);
        p
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Add `(2*pi)^p (a cos + b sin)(2*pi f.x)`, canonicalising the sign of
    /// `f` (first nonzero component positive; sin flips with the sign) and
    /// pruning terms whose coefficients cancel to exactly zero.
    fn add_term(&mut self, freq: &[i32], tau_power: u8, a: f64, mut b: f64) {
        debug_assert_eq!(freq.len(), self.n);
        if a == 0.0 && b == 0.0 {
            return;
        }
        let mut f = freq.to_vec();
        match f.iter().find(|&&c| c != 0) {
            None => b = 0.0, // sin(0) contributes nothing
            Some(&first) if first < 0 => {
                for c in &mut f {
                    *c = -*c;
                }
                b = -b;
            }
            _ => {}
        }
        if a == 0.0 && b == 0.0 {
            return;
        }
        let key = TermKey { freq: f, tau_power };
        let entry = self.terms.entry(key.clone()).or_insert((0.0, 0.0));
        entry.0 += a;
        entry.1 += b;
        if entry.0 == 0.0 && entry.1 == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn add_assign(&mut self, other: &TrigPoly) {
        assert_eq!(self.n, other.n);
        for (k, &(a, b)) in &other.terms {
            self.add_term(&k.freq, k.tau_power, a, b);
        }
    }

    pub fn scaled(&self, s: f64) -> TrigPoly {
        let mut out = TrigPoly::zero(self.n);
        for (k, &(a, b)) in &self.terms {
            out.add_term(&k.freq, k.tau_power, s * a, s * b);
        }
        out
    }

    /// Product via the angle addition formulas; powers of 2*pi add.
    pub fn mul(&self, other: &TrigPoly) -> TrigPoly {
        assert_eq!(self.n, other.n);
        let mut out = TrigPoly::zero(self.n);
        for (k1, &(a1, b1)) in &self.terms {
            for (k2, &(a2, b2)) in &other.terms {
                let p = k1.tau_power + k2.tau_power;
                let sum: Vec<i32> = k1
                    .freq
                    .iter()
                    .zip(&k2.freq)
                    .map(|(x, y)| x + y)
                    .collect();
                let diff: Vec<i32> = k1
                    .freq
                    .iter()
                    .zip(&k2.freq)
                    .map(|(x, y)| x - y)
                    .collect();
                // cos(s+t), sin(s+t), cos(s-t), sin(s-t) coefficients.
                out.add_term(&sum, p, 0.5 * (a1 * a2 - b1 * b2), 0.5 * (a1 * b2 + b1 * a2));
                out.add_term(&diff, p, 0.5 * (a1 * a2 + b1 * b2), 0.5 * (b1 * a2 - a1 * b2));
            }
        }
        out
    }

    /// Partial derivative in coordinate `j`. Multiplies by the integer
    /// frequency and raises the 2*pi power; no transcendental arithmetic.
    pub fn partial(&self, j: usize) -> TrigPoly {
        assert!(j < self.n);
        let mut out = TrigPoly::zero(self.n);
        for (k, &(a, b)) in &self.terms {
            let fj = k.freq[j] as f64;
            if fj == 0.0 {
                continue;
            }
            out.add_term(&k.freq, k.tau_power + 1, fj * b, -(fj * a));
        }
        out
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let mut acc = 0.0;
        for (k, &(a, b)) in &self.terms {
            let mut phase = 0.0;
            for (f, xi) in k.freq.iter().zip(x) {
                phase += *f as f64 * xi;
            }
            let theta = TAU * phase;
            acc += TAU.powi(k.tau_power as i32) * (a * theta.cos() + b * theta.sin());
        }
        acc
    }

    /// Rigorous enclosure of the range over a box.
    pub fn evaluate_interval(&self, x: &[crate::interval::Interval]) -> crate::interval::Interval {
        use crate::interval::Interval;
        debug_assert_eq!(x.len(), self.n);
        let mut acc = Interval::point(0.0);
        for (k, &(a, b)) in &self.terms {
            let mut phase = Interval::point(0.0);
            for (f, xi) in k.freq.iter().zip(x) {
                phase = phase.add(&xi.scale(*f as f64));
            }
            let theta = phase.scale(TAU);
            let term = theta.cos().scale(a).add(&theta.sin().scale(b));
            acc = acc.add(&term.scale(TAU.powi(k.tau_power as i32)));
        }
        acc
    }

    /// Substitute `x_j = c`. The result no longer depends on coordinate `j`
    /// (all its frequencies are zero there); the dimension is kept so that
    /// callers can re-index separately.
    pub fn substitute(&self, j: usize, c: f64) -> TrigPoly {
        let mut out = TrigPoly::zero(self.n);
        for (k, &(a, b)) in &self.terms {
            let fj = k.freq[j];
            if fj == 0 {
                out.add_term(&k.freq, k.tau_power, a, b);
                continue;
            }
            let phi = TAU * fj as f64 * c;
            let (s, co) = phi.sin_cos();
            let mut f = k.freq.clone();
            f[j] = 0;
            // a cos(t+phi) + b sin(t+phi)
            out.add_term(&f, k.tau_power, a * co + b * s, -a * s + b * co);
        }
        out
    }

    /// Re-express in the coordinates that remain after deleting `drop`
    /// (which must not appear in any frequency).
    pub fn project_out(&self, drop: &[usize]) -> TrigPoly {
        let keep: Vec<usize> = (0..self.n).filter(|i| !drop.contains(i)).collect();
        let mut out = TrigPoly::zero(keep.len());
        for (k, &(a, b)) in &self.terms {
            for &d in drop {
                assert_eq!(k.freq[d], 0, "projecting out a live coordinate");
            }
            let f: Vec<i32> = keep.iter().map(|&i| k.freq[i]).collect();
            out.add_term(&f, k.tau_power, a, b);
        }
        out
    }

    /// Largest absolute frequency in coordinate `j`.
    pub fn max_frequency(&self, j: usize) -> i32 {
        self.terms
            .keys()
            .map(|k| k.freq[j].abs())
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms
            .values()
            .map(|&(a, b)| a.abs().max(b.abs()))
            .fold(0.0, f64::max)
    }

    /// Constant part (the coefficient of the zero frequency), including its
    /// 2*pi powers.
    pub fn mean(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(k, _)| k.freq.iter().all(|&f| f == 0))
            .map(|(k, &(a, _))| TAU.powi(k.tau_power as i32) * a)
            .sum()
    }
}

/// Differential form of degree `k` on the `n`-torus (or a plane region with
/// the same coordinates): a map from strictly increasing multi-indices to
/// trigonometric coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialForm {
    n: usize,
    k: usize,
    terms: BTreeMap<MultiIndex, TrigPoly>,
}

impl DifferentialForm {
    // degrees above n are representable, but only by the empty (zero) form:
    // add_component rejects any multi-index of length > n
    pub fn zero(n: usize, k: usize) -> Self {
        DifferentialForm {
            n,
            k,
            terms: BTreeMap::new(),
        }
    }

    /// Constant form `c dx_I` (indices 0-based, strictly increasing).
    pub fn constant(n: usize, index: &[usize], c: f64) -> Self {
        let mut f = DifferentialForm::zero(n, index.len());
        f.add_component(index, TrigPoly::constant(n, c));
        f
    }

    pub fn from_component(n: usize, index: &[usize], coeff: TrigPoly) -> Self {
        let mut f = DifferentialForm::zero(n, index.len());
        f.add_component(index, coeff);
        f
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn components(&self) -> impl Iterator<Item = (&MultiIndex, &TrigPoly)> {
        self.terms.iter()
    }

    pub fn component(&self, index: &[usize]) -> Option<&TrigPoly> {
        self.terms.get(index)
    }

    pub fn add_component(&mut self, index: &[usize], coeff: TrigPoly) {
        assert_eq!(index.len(), self.k, "index length must equal the degree");
        assert!(
            index.windows(2).all(|w| w[0] < w[1]),
            "multi-index must be strictly increasing"
        );
        assert!(index.iter().all(|&i| i < self.n));
        assert_eq!(coeff.dimension(), self.n);
        if coeff.is_zero() {
            return;
        }
        let entry = self
            .terms
            .entry(index.to_vec())
            .or_insert_with(|| TrigPoly::zero(self.n));
        entry.add_assign(&coeff);
        if entry.is_zero() {
            self.terms.remove(index);
        }
    }

    pub fn add_assign(&mut self, other: &DifferentialForm) {
        assert_eq!(self.n, other.n);
        assert_eq!(self.k, other.k);
        for (idx, c) in &other.terms {
            self.add_component(idx, c.clone());
        }
    }

    pub fn scaled(&self, s: f64) -> DifferentialForm {
        let mut out = DifferentialForm::zero(self.n, self.k);
        for (idx, c) in &self.terms {
            out.add_component(idx, c.scaled(s));
        }
        out
    }

    /// Exterior derivative, exact on coefficients.
    pub fn exterior_derivative(&self) -> DifferentialForm {
        let mut out = DifferentialForm::zero(self.n, self.k + 1);
        if self.k + 1 > self.n {
            return out;
        }
        for (idx, coeff) in &self.terms {
            for j in 0..self.n {
                if idx.contains(&j) {
                    continue;
                }
                let dj = coeff.partial(j);
                if dj.is_zero() {
                    continue;
                }
                let pos = idx.iter().take_while(|&&i| i < j).count();
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                let mut new_idx = idx.clone();
                new_idx.insert(pos, j);
                out.add_component(&new_idx, dj.scaled(sign));
            }
        }
        out
    }

    /// Wedge product with shuffle signs.
    pub fn wedge(&self, other: &DifferentialForm) -> DifferentialForm {
        assert_eq!(self.n, other.n);
        let k = self.k + other.k;
        let mut out = DifferentialForm::zero(self.n, k.min(self.n));
        if k > self.n {
            return out;
        }
        for (i1, c1) in &self.terms {
            for (i2, c2) in &other.terms {
                if let Some((merged, sign)) = merge_indices(i1, i2) {
                    out.add_component(&merged, c1.mul(c2).scaled(sign));
                }
            }
        }
        out
    }

    /// Evaluate on a frame of `k` tangent vectors at point `p`:
    /// sum over I of c_I(p) det(rows I of the n x k frame matrix).
    pub fn evaluate(&self, p: &[f64], frame: &[Vec<f64>]) -> Result<f64> {
        if frame.len() != self.k {
            return Err(SolenoidError::DegreeMismatch {
                expected: self.k,
                got: frame.len(),
            });
        }
        if p.len() != self.n || frame.iter().any(|v| v.len() != self.n) {
            return Err(SolenoidError::DimensionMismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        let mut acc = 0.0;
        for (idx, coeff) in &self.terms {
            acc += coeff.evaluate(p) * frame_minor(frame, idx);
        }
        Ok(acc)
    }

    /// Restrict to the coordinate subtorus `{x_j = c_j, j in normal}`:
    /// components meeting a normal coordinate vanish, the rest have the
    /// normal values substituted, and indices are re-expressed in the
    /// remaining coordinates.
    pub fn restrict(&self, normal: &[usize], values: &[f64]) -> DifferentialForm {
        assert_eq!(normal.len(), values.len());
        let keep: Vec<usize> = (0..self.n).filter(|i| !normal.contains(i)).collect();
        let mut out = DifferentialForm::zero(keep.len(), self.k.min(keep.len()));
        if self.k > keep.len() {
            return out;
        }
        for (idx, coeff) in &self.terms {
            if idx.iter().any(|i| normal.contains(i)) {
                continue;
            }
            let mut c = coeff.clone();
            for (&j, &v) in normal.iter().zip(values) {
                c = c.substitute(j, v);
            }
            let c = c.project_out(normal);
            let new_idx: Vec<usize> = idx
                .iter()
                .map(|i| keep.iter().position(|kk| kk == i).unwrap())
                .collect();
            out.add_component(&new_idx, c);
        }
        out
    }

    pub fn max_frequency(&self, j: usize) -> i32 {
        self.terms
            .values()
            .map(|c| c.max_frequency(j))
            .max()
            .unwrap_or(0)
    }

    /// Uniform bound used in error reporting: sum over components of the
    /// largest coefficient magnitude.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.values().map(|c| c.max_abs_coefficient()).sum()
    }

    /// Coefficient-wise distance, for tests and drift measurements. Both
    /// forms are compared term by term; missing terms count at full weight.
    pub fn distance(&self, other: &DifferentialForm) -> f64 {
        let mut d: f64 = 0.0;
        let keys: std::collections::BTreeSet<_> =
            self.terms.keys().chain(other.terms.keys()).collect();
        for idx in keys {
            let zero = TrigPoly::zero(self.n);
            let a = self.terms.get(idx).unwrap_or(&zero);
            let b = other.terms.get(idx).unwrap_or(&zero);
            let mut diff = a.clone();
            diff.add_assign(&b.scaled(-1.0));
            d = d.max(diff.max_abs_coefficient());
        }
        d
    }
}

/// Merge two strictly increasing index lists; `None` if they share an index,
/// otherwise the merged list and the sign of the interleaving permutation.
fn merge_indices(a: &[usize], b: &[usize]) -> Option<(MultiIndex, f64)> {
    let mut merged = Vec::with_capacity(a.len() + b.len());
    let mut sign = 1.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            merged.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining a-entries.
            if (a.len() - i) % 2 == 1 {
                sign = -sign;
            }
            merged.push(b[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&a[i..]);
    merged.extend_from_slice(&b[j..]);
    Some((merged, sign))
}

/// Determinant of the k x k minor of the frame matrix (columns = frame
/// vectors) given by the row set `idx`. Laplace expansion; k <= 4 in
/// practice.
pub fn frame_minor(frame: &[Vec<f64>], idx: &[usize]) -> f64 {
    let k = idx.len();
    match k {
        0 => 1.0,
        1 => frame[0][idx[0]],
        2 => {
            frame[0][idx[0]] * frame[1][idx[1]] - frame[1][idx[0]] * frame[0][idx[1]]
        }
        _ => {
            let mut acc = 0.0;
            for (c, col) in frame.iter().enumerate() {
                let rest: Vec<Vec<f64>> = frame
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != c)
                    .map(|(_, v)| v.clone())
                    .collect();
                let minor = frame_minor(&rest, &idx[1..]);
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * col[idx[0]] * minor;
            }
            acc
        }
    }
}

/// Lexicographically ordered constant forms `dx_I`, a basis of the space of
/// harmonic `k`-forms on the flat `n`-torus. Length `C(n, k)`.
pub fn harmonic_basis(n: usize, k: usize) -> Vec<DifferentialForm> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(DifferentialForm::constant(n, &idx, 1.0));
        // next k-combination of {0..n-1} in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Multi-indices in the same order as `harmonic_basis`.
pub fn basis_indices(n: usize, k: usize) -> Vec<MultiIndex> {
    harmonic_basis(n, k)
        .iter()
        .map(|f| f.terms.keys().next().unwrap().clone())
        .collect()
}

/// Normalised bump profile: `exp(-1/(1-u^2))` on `(-1, 1)`, sampled on a
/// uniform grid and evaluated through a cubic Hermite spline with analytic
/// derivatives at the knots. The normaliser is the exact integral of the
/// spline itself, so the evaluated profile integrates to one up to rounding.
#[derive(Debug)]
pub struct BumpProfile {
    values: Vec<f64>,
    derivs: Vec<f64>,
    prefix: Vec<f64>,
    h: f64,
    norm: f64,
}

const BUMP_SAMPLES: usize = 8192;

fn raw_bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

fn raw_bump_derivative(u: f64) -> f64 {
    if u.abs() < 1.0 {
        let w = 1.0 - u * u;
        raw_bump(u) * (-2.0 * u / (w * w))
    } else {
        0.0
    }
}

impl BumpProfile {
    fn new() -> Self {
        let n = BUMP_SAMPLES;
        let h = 2.0 / n as f64;
        let values: Vec<f64> = (0..=n).map(|i| raw_bump(-1.0 + i as f64 * h)).collect();
        let derivs: Vec<f64> = (0..=n)
            .map(|i| raw_bump_derivative(-1.0 + i as f64 * h))
            .collect();
        // Exact integral of the Hermite interpolant on each panel:
        // h/2 (f0 + f1) + h^2/12 (d0 - d1).
        let mut pieces: Vec<f64> = (0..n)
            .map(|i| {
                0.5 * h * (values[i] + values[i + 1])
                    + h * h / 12.0 * (derivs[i] - derivs[i + 1])
            })
            .collect();
        let mut prefix = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for &p in &pieces {
            acc += p;
            prefix.push(acc);
        }
        let norm = crate::quad::tree_sum(&mut pieces);
        BumpProfile {
            values,
            derivs,
            prefix,
            h,
            norm,
        }
    }

    /// Shared profile; the sampling is independent of the width parameter.
    pub fn shared() -> Arc<BumpProfile> {
        use std::sync::OnceLock;
        static PROFILE: OnceLock<Arc<BumpProfile>> = OnceLock::new();
        PROFILE.get_or_init(|| Arc::new(BumpProfile::new())).clone()
    }

    /// Normalised bump at `u`, supported on `(-1, 1)`, integral one.
    pub fn eval(&self, u: f64) -> f64 {
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let t = (u + 1.0) / self.h;
        let i = (t.floor() as usize).min(BUMP_SAMPLES - 1);
        let s = t - i as f64;
        let (f0, f1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.derivs[i] * self.h, self.derivs[i + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * f0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * f1
            + (s3 - s2) * d1;
        v / self.norm
    }

    /// Exact integral of the normalised profile over `(-inf, u]`: the
    /// piecewise Hermite antiderivative, so `cumulative(-1) = 0` and
    /// `cumulative(1) = 1` hold to rounding.
    pub fn cumulative(&self, u: f64) -> f64 {
        let total = self.prefix[BUMP_SAMPLES];
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let t = (u + 1.0) / self.h;
        let i = (t.floor() as usize).min(BUMP_SAMPLES - 1);
        let s = t - i as f64;
        let (f0, f1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.derivs[i] * self.h, self.derivs[i + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s2 * s2;
        let part = (0.5 * s4 - s3 + s) * f0
            + (0.25 * s4 - 2.0 * s3 / 3.0 + 0.5 * s2) * d0
            + (-0.5 * s4 + s3) * f1
            + (0.25 * s4 - s3 / 3.0) * d1;
        (self.prefix[i] + self.h * part) / total
    }
}

/// Thom form of the coordinate subtorus `{x_j = c_j, j in normal}` with
/// profile half-width `rho`: product over normal coordinates of
/// `b_rho(x_j - c_j)` times `dx_{normal}`. Each factor integrates to one
/// over a normal circle, so the form represents the Poincare dual of the
/// subtorus.
#[derive(Debug, Clone)]
pub struct ThomForm {
    n: usize,
    normal: Vec<usize>,
    centers: Vec<f64>,
    rho: f64,
    profile: Arc<BumpProfile>,
}

impl ThomForm {
    pub fn new(n: usize, normal: &[usize], centers: &[f64], rho: f64) -> Result<Self> {
        if normal.is_empty() || normal.len() != centers.len() {
            return Err(SolenoidError::Parameter(
                "thom form needs matching normal coordinates and centers".into(),
            ));
        }
        if normal.windows(2).any(|w| w[0] >= w[1]) || normal.iter().any(|&j| j >= n) {
            return Err(SolenoidError::Parameter(
                "normal coordinates must be strictly increasing and in range".into(),
            ));
        }
        if !(rho > 0.0 && rho <= 0.5) {
            return Err(SolenoidError::Parameter(format!(
                "thom profile width rho = {rho} outside (0, 0.5]"
            )));
        }
        Ok(ThomForm {
            n,
            normal: normal.to_vec(),
            centers: centers.to_vec(),
            rho,
            profile: BumpProfile::shared(),
        })
    }

    pub fn degree(&self) -> usize {
        self.normal.len()
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn normal_coordinates(&self) -> &[usize] {
        &self.normal
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Scalar coefficient at `p` (the product of normal bumps).
    pub fn coefficient(&self, p: &[f64]) -> f64 {
        let mut acc = 1.0;
        for (&j, &c) in self.normal.iter().zip(&self.centers) {
            // distance on the circle, in [-1/2, 1/2)
            let mut d = p[j] - c;
            d -= d.round();
            acc *= self.profile.eval(d / self.rho) / self.rho;
            if acc == 0.0 {
                return 0.0;
            }
        }
        acc
    }

    pub fn evaluate(&self, p: &[f64], frame: &[Vec<f64>]) -> Result<f64> {
        if frame.len() != self.degree() {
            return Err(SolenoidError::DegreeMismatch {
                expected: self.degree(),
                got: frame.len(),
            });
        }
        let c = self.coefficient(p);
        if c == 0.0 {
            return Ok(0.0);
        }
        Ok(c * frame_minor(frame, &self.normal))
    }

    /// The Thom form is closed: its coefficient depends only on the normal
    /// coordinates, whose differentials already span `dx_{normal}`, so every
    /// derivative term is wedged with a repeated factor. The zero result is
    /// analytic, not numerical.
    pub fn exterior_derivative(&self) -> DifferentialForm {
        DifferentialForm::zero(self.n, self.degree() + 1)
    }

    /// Exact pullback integral along an affine path for a degree-one form:
    /// the normal coordinate moves as `a + b t`, so the integrand is
    /// `b_rho(a + b t - c - k) * b` summed over lattice copies `k`, and each
    /// copy telescopes through the cumulative profile. Degenerate paths with
    /// `b = 0` never pick up the `dx_normal` factor and integrate to zero.
    pub(crate) fn affine_line_integral(&self, a: f64, b: f64, lo: f64, hi: f64) -> f64 {
        debug_assert_eq!(self.degree(), 1);
        if b == 0.0 || !(hi > lo) {
            return 0.0;
        }
        let c = self.centers[0];
        let (vlo, vhi) = if b > 0.0 {
            (a + b * lo, a + b * hi)
        } else {
            (a + b * hi, a + b * lo)
        };
        let k_lo = (vlo - c - self.rho).floor() as i64;
        let k_hi = (vhi - c + self.rho).ceil() as i64;
        let mut acc = 0.0;
        for k in k_lo..=k_hi {
            let u0 = (a + b * lo - c - k as f64) / self.rho;
            let u1 = (a + b * hi - c - k as f64) / self.rho;
            acc += self.profile.cumulative(u1) - self.profile.cumulative(u0);
        }
        acc
    }
}

/// Either form kind, unified for current evaluation.
#[derive(Debug, Clone)]
pub enum AnyForm {
    Trig(DifferentialForm),
    Thom(ThomForm),
}

impl AnyForm {
    pub fn degree(&self) -> usize {
        match self {
            AnyForm::Trig(f) => f.degree(),
            AnyForm::Thom(t) => t.degree(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            AnyForm::Trig(f) => f.dimension(),
            AnyForm::Thom(t) => t.dimension(),
        }
    }

    pub fn evaluate(&self, p: &[f64], frame: &[Vec<f64>]) -> Result<f64> {
        match self {
            AnyForm::Trig(f) => f.evaluate(p, frame),
            AnyForm::Thom(t) => t.evaluate(p, frame),
        }
    }

    /// Smallest feature scale along coordinate `j`, used to refine leaf
    /// quadrature: `None` means trigonometric content only.
    pub fn feature_scale(&self, j: usize) -> Option<f64> {
        match self {
            AnyForm::Trig(_) => None,
            AnyForm::Thom(t) => {
                if t.normal.contains(&j) {
                    Some(t.rho)
                } else {
                    None
                }
            }
        }
    }

    pub fn max_frequency(&self, j: usize) -> i32 {
        match self {
            AnyForm::Trig(f) => f.max_frequency(j),
            AnyForm::Thom(_) => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Random form whose coefficients are dyadic rationals with small
    /// numerators and whose frequencies are small integers, so that every
    /// intermediate product in d and wedge is exactly representable and the
    /// algebraic identities below hold exactly rather than approximately.
    fn random_dyadic_form(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DifferentialForm {
        let indices = basis_indices(n, k);
        let mut f = DifferentialForm::zero(n, k);
        for idx in indices {
            if rng.random_range(0..3) == 0 {
                continue;
            }
            let mut coeff = TrigPoly::zero(n);
            for _ in 0..rng.random_range(1..3) {
                let freq: Vec<i32> = (0..n).map(|_| rng.random_range(-3..=3)).collect();
                let a = rng.random_range(-64i32..=64) as f64 / 1024.0;
                let b = rng.random_range(-64i32..=64) as f64 / 1024.0;
                coeff.add_term(&freq, 0, a, b);
            }
            f.add_component(&idx, coeff);
        }
        f
    }

    #[test]
    fn exterior_derivative_of_sin_dx2() {
        // d(sin(2 pi x1) dx2) = 2 pi cos(2 pi x1) dx1 ^ dx2
        let coeff = TrigPoly::harmonic(2, &[1, 0], 0.0, 1.0);
        let form = DifferentialForm::from_component(2, &[1], coeff);
        let d = form.exterior_derivative();
        let expected_coeff = {
            let mut p = TrigPoly::zero(2);
            p.add_term(&[1, 0], 1, 1.0, 0.0);
            p
        };
        let expected = DifferentialForm::from_component(2, &[0, 1], expected_coeff);
        assert_eq!(d, expected);
    }

    #[test]
    fn derivative_of_constant_form_is_zero() {
        let form = DifferentialForm::constant(4, &[0, 2], 3.5);
        assert!(form.exterior_derivative().is_zero());
    }

    #[test]
    fn d_after_d_is_exactly_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(2..=4usize);
            let k = rng.random_range(0..n);
            let f = random_dyadic_form(&mut rng, n, k);
            let dd = f.exterior_derivative().exterior_derivative();
            assert!(dd.is_zero(), "d(d(form)) left terms: {dd:?}");
        }
    }

    #[test]
    fn wedge_anticommutes_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(2..=4usize);
            let ka = rng.random_range(1..=2usize).min(n);
            let kb = rng.random_range(1..=2usize).min(n - 0);
            if ka + kb > n {
                continue;
            }
            let a = random_dyadic_form(&mut rng, n, ka);
            let b = random_dyadic_form(&mut rng, n, kb);
            let ab = a.wedge(&b);
            let sign = if (ka * kb) % 2 == 0 { 1.0 } else { -1.0 };
            let ba = b.wedge(&a).scaled(sign);
            assert_eq!(ab, ba);
        }
    }

    #[test]
    fn wedge_of_repeated_one_form_vanishes() {
        let coeff = TrigPoly::harmonic(2, &[1, 1], 0.25, -0.5);
        let a = DifferentialForm::from_component(2, &[0], coeff);
        assert!(a.wedge(&a).is_zero());
    }

    #[test]
    fn leibniz_rule_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let n = rng.random_range(2..=4usize);
            let ka = rng.random_range(0..=1usize);
            let kb = rng.random_range(0..=1usize);
            if ka + kb + 1 > n {
                continue;
            }
            let a = random_dyadic_form(&mut rng, n, ka);
            let b = random_dyadic_form(&mut rng, n, kb);
            let lhs = a.wedge(&b).exterior_derivative();
            let sign = if ka % 2 == 0 { 1.0 } else { -1.0 };
            let mut rhs = a.exterior_derivative().wedge(&b);
            rhs.add_assign(&a.wedge(&b.exterior_derivative()).scaled(sign));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn evaluate_matches_pointwise_wedge_oracle() {
        // wedge compared against pointwise antisymmetrised products of the
        // factors, at random points and frames
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let n = 4;
            let a = random_dyadic_form(&mut rng, n, 1);
            let b = random_dyadic_form(&mut rng, n, 1);
            let w = a.wedge(&b);
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let v1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lhs = w.evaluate(&p, &[v1.clone(), v2.clone()]).unwrap();
            let rhs = a.evaluate(&p, &[v1.clone()]).unwrap() * b.evaluate(&p, &[v2.clone()]).unwrap()
                - a.evaluate(&p, &[v2]).unwrap() * b.evaluate(&p, &[v1]).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn evaluate_constant_forms_on_frames() {
        let dx1 = DifferentialForm::constant(2, &[0], 1.0);
        let alpha = 0.5f64.sqrt();
        let v = dx1.evaluate(&[0.0, 0.0], &[vec![1.0, alpha]]).unwrap();
        assert_eq!(v, 1.0);
        let vol = DifferentialForm::constant(2, &[0, 1], 1.0);
        let det = vol
            .evaluate(&[0.2, 0.7], &[vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap();
        assert_eq!(det, 1.0);
    }

    #[test]
    fn evaluate_wrong_frame_count_errors() {
        let dx1 = DifferentialForm::constant(2, &[0], 1.0);
        assert!(matches!(
            dx1.evaluate(&[0.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]]),
            Err(SolenoidError::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn harmonic_basis_lexicographic_counts() {
        assert_eq!(harmonic_basis(4, 2).len(), 6);
        assert_eq!(harmonic_basis(2, 1).len(), 2);
        assert_eq!(harmonic_basis(3, 0).len(), 1);
        let idx = basis_indices(4, 2);
        assert_eq!(
            idx,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }

    #[test]
    fn restriction_drops_normal_components_and_substitutes() {
        // (sin(2 pi x2) dx1 + cos(2 pi x1) dx2) restricted to {x1 = 1/4}
        let mut f = DifferentialForm::zero(2, 1);
        f.add_component(&[0], TrigPoly::harmonic(2, &[0, 1], 0.0, 1.0));
        f.add_component(&[1], TrigPoly::harmonic(2, &[1, 0], 1.0, 0.0));
        let r = f.restrict(&[0], &[0.25]);
        assert_eq!(r.dimension(), 1);
        assert_eq!(r.degree(), 1);
        // cos(2 pi / 4) = 0, so the restriction is the zero form
        assert!(r.distance(&DifferentialForm::zero(1, 1)) < 1e-15);
    }

    #[test]
    fn bump_profile_normalised_and_supported() {
        let profile = BumpProfile::shared();
        assert_eq!(profile.eval(1.0), 0.0);
        assert_eq!(profile.eval(-1.2), 0.0);
        assert!(profile.eval(0.0) > 0.0);
        // integral over the support, fine trapezoid
        let n = 1 << 16;
        let mut terms: Vec<f64> = (0..n)
            .map(|i| profile.eval(-1.0 + 2.0 * (i as f64 + 0.5) / n as f64) * (2.0 / n as f64))
            .collect();
        let total = crate::quad::tree_sum(&mut terms);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn thom_form_unit_mass_on_normal_slice() {
        let t = ThomForm::new(2, &[0], &[1.0 / 3.0], 0.05).unwrap();
        // integrate b_rho(x1 - 1/3) over the x1 circle
        let n = 1 << 15;
        let mut terms: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 / n as f64;
                t.coefficient(&[x, 0.0]) / n as f64
            })
            .collect();
        let total = crate::quad::tree_sum(&mut terms);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn thom_form_vanishes_outside_tube_and_is_closed() {
        let t = ThomForm::new(2, &[1], &[0.5], 0.1).unwrap();
        assert_eq!(t.coefficient(&[0.3, 0.75]), 0.0);
        assert!(t.coefficient(&[0.9, 0.52]) > 0.0);
        assert!(t.exterior_derivative().is_zero());
    }

    #[test]
    fn thom_form_rejects_bad_parameters() {
        assert!(ThomForm::new(2, &[0], &[0.5], 0.0).is_err());
        assert!(ThomForm::new(2, &[0], &[0.5], 0.7).is_err());
        assert!(ThomForm::new(2, &[1, 0], &[0.5, 0.5], 0.1).is_err());
        assert!(ThomForm::new(2, &[0, 5], &[0.5, 0.5], 0.1).is_err());
    }

    #[test]
    fn trig_poly_substitute_and_project() {
        let p = TrigPoly::harmonic(2, &[2, 1], 1.0, 0.5);
        let q = p.substitute(0, 0.125).project_out(&[0]);
        let direct = |x2: f64| {
            let theta = TAU * (2.0 * 0.125 + x2);
            theta.cos() + 0.5 * theta.sin()
        };
        for &x2 in &[0.0, 0.3, 0.77] {
            assert_abs_diff_eq!(q.evaluate(&[x2]), direct(x2), epsilon = 1e-14);
        }
    }
}
