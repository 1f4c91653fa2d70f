//! Gaussian–Hermite test functions (closed under Fourier transform,
//! derivatives, coordinate multiplication, translation and conjugation),
//! Schwartz seminorms, and momentum-space contraction quadratures including
//! the massless ε-limit scan.
//!
//! Transform convention, fixed once: each axis carries a sign `s` (+1 for
//! the time axis, −1 for space) and
//! `φ̃(k) = (2π)^{−d/2} ∫ φ(x) e^{i Σ s_i k_i x_i} dx`,
//! so in four dimensions the exponent is `i(k⁰x⁰ − 𝐤·𝐱)`. Modulations use
//! the same signed pairing: `e_w(x) = e^{i Σ s_i w_i x_i}`, which shifts the
//! transform argument by exactly `w`.

use crate::fields::{FieldKind, FieldRoster, FieldSpec};
use crate::wick::PairingDescriptor;
use nalgebra::Vector3;
use num_complex::Complex;
use std::collections::BTreeMap;
use thiserror::Error;

pub type C64 = Complex<f64>;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("test function dimension {0} unsupported (want 1..=4)")]
    BadDimension(usize),
    #[error("axis data length mismatch")]
    AxisMismatch,
    #[error("seminorm order {0} exceeds supported maximum 6")]
    OrderTooHigh(usize),
    #[error("ε list must hold ≥ 3 strictly decreasing positive values")]
    BadEpsList,
    #[error("radial rule needs isotropic spatial profiles and non-spinor kernels: {0}")]
    RuleUnsupported(String),
    #[error("quadrature did not converge: value {value}, refinement delta {err:.3e} > 10·tol ({tolerance:.3e})")]
    NonConvergent { value: C64, err: f64, tolerance: f64 },
    #[error("quadrature points per axis must be an even number ≥ 8, got {0}")]
    BadPointCount(usize),
}

/// One coordinate axis of a test function: Gaussian center and width, a
/// modulation frequency, and the transform sign (+1 time, −1 space).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Axis {
    pub center: f64,
    pub width: f64,
    pub modulation: f64,
    pub sign: f64,
}

/// Finite Hermite–Gaussian combination
/// `Σ_n c_n Π_i H_{n_i}((x_i−c_i)/σ_i) · e^{−Σ_i (x_i−c_i)²/(2σ_i²)} · e_w(x)`.
///
/// Dimension 4 means (time, space, space, space); dimensions 1–3 are purely
/// one axis of each sign as listed in `axes`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchwartzTestFn {
    pub axes: Vec<Axis>,
    /// Hermite multi-index (one entry per axis) → coefficient.
    pub terms: BTreeMap<Vec<u32>, C64>,
}

/// Default axis signs by dimension: 4D is (+,−,−,−); 3D is spatial; 1D is a
/// single time-like axis.
pub fn default_signs(dim: usize) -> Result<Vec<f64>, QuadError> {
    match dim {
        1 => Ok(vec![1.0]),
        2 => Ok(vec![1.0, -1.0]),
        3 => Ok(vec![-1.0, -1.0, -1.0]),
        4 => Ok(vec![1.0, -1.0, -1.0, -1.0]),
        d => Err(QuadError::BadDimension(d)),
    }
}

impl SchwartzTestFn {
    /// Plain Gaussian with Hermite index 0 and unit coefficient.
    pub fn gaussian(centers: &[f64], widths: &[f64]) -> Result<Self, QuadError> {
        if centers.len() != widths.len() {
            return Err(QuadError::AxisMismatch);
        }
        let signs = default_signs(centers.len())?;
        let axes = centers
            .iter()
            .zip(widths)
            .zip(signs)
            .map(|((&c, &w), s)| Axis {
                center: c,
                width: w,
                modulation: 0.0,
                sign: s,
            })
            .collect::<Vec<_>>();
        let mut terms = BTreeMap::new();
        terms.insert(vec![0u32; centers.len()], C64::new(1.0, 0.0));
        Ok(SchwartzTestFn { axes, terms })
    }

    pub fn with_modulation(mut self, modulation: &[f64]) -> Result<Self, QuadError> {
        if modulation.len() != self.axes.len() {
            return Err(QuadError::AxisMismatch);
        }
        for (a, &w) in self.axes.iter_mut().zip(modulation) {
            a.modulation = w;
        }
        Ok(self)
    }

    pub fn with_term(mut self, index: &[u32], coeff: C64) -> Self {
        assert_eq!(index.len(), self.axes.len());
        *self.terms.entry(index.to_vec()).or_insert(C64::new(0.0, 0.0)) += coeff;
        self
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out
    }

    /// Pointwise sum; both functions must share the same axes.
    pub fn try_add(&self, other: &Self) -> Option<Self> {
        if self.axes != other.axes {
            return None;
        }
        let mut out = self.clone();
        for (k, v) in &other.terms {
            *out.terms.entry(k.clone()).or_insert(C64::new(0.0, 0.0)) += *v;
        }
        out.terms.retain(|_, v| *v != C64::new(0.0, 0.0));
        Some(out)
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        let xc: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.eval_c(&xc)
    }

    /// Evaluation at complex arguments; every building block is entire, so
    /// this is the honest analytic continuation (used by derivative checks).
    pub fn eval_c(&self, x: &[C64]) -> C64 {
        assert_eq!(x.len(), self.dim());
        let mut envelope = C64::new(0.0, 0.0);
        let mut xi = Vec::with_capacity(self.dim());
        for (a, &xv) in self.axes.iter().zip(x) {
            let t = (xv - a.center) / a.width;
            xi.push(t);
            envelope += -t * t / 2.0 + C64::new(0.0, a.sign * a.modulation) * xv;
        }
        let envelope = envelope.exp();
        let max_n: u32 = self
            .terms
            .keys()
            .flat_map(|k| k.iter().copied())
            .max()
            .unwrap_or(0);
        // Hermite values per axis up to the needed order.
        let mut h: Vec<Vec<C64>> = Vec::with_capacity(self.dim());
        for &t in &xi {
            h.push(hermite_ladder(t, max_n));
        }
        let mut acc = C64::new(0.0, 0.0);
        for (idx, &c) in &self.terms {
            let mut prod = c;
            for (axis, &n) in idx.iter().enumerate() {
                prod *= h[axis][n as usize];
            }
            acc += prod;
        }
        acc * envelope
    }

    /// Exact Fourier transform, staying inside the family. Per axis:
    /// `(c, σ, w) → (−w, 1/σ, c)` with a per-term factor `σ·(i s)^n·e^{i s w c}`.
    pub fn fourier(&self) -> Self {
        let new_axes: Vec<Axis> = self
            .axes
            .iter()
            .map(|a| Axis {
                center: -a.modulation,
                width: 1.0 / a.width,
                modulation: a.center,
                sign: a.sign,
            })
            .collect();
        let mut new_terms = BTreeMap::new();
        for (idx, &c) in &self.terms {
            let mut factor = C64::new(1.0, 0.0);
            for (axis, &n) in self.axes.iter().zip(idx) {
                let is = C64::new(0.0, axis.sign);
                factor *= axis.width * is.powu(n) * C64::new(0.0, axis.sign * axis.modulation * axis.center).exp();
            }
            *new_terms.entry(idx.clone()).or_insert(C64::new(0.0, 0.0)) += c * factor;
        }
        SchwartzTestFn {
            axes: new_axes,
            terms: new_terms,
        }
    }

    /// Convenience: `fourier()` then evaluate; hot loops should precompute
    /// the transform once.
    pub fn fourier_eval(&self, k: &[f64]) -> C64 {
        self.fourier().eval(k)
    }

    /// ∂/∂x_axis, exact in the family.
    pub fn derivative(&self, axis: usize) -> Self {
        let a = self.axes[axis];
        let mut out = SchwartzTestFn {
            axes: self.axes.clone(),
            terms: BTreeMap::new(),
        };
        let mut push = |idx: Vec<u32>, c: C64| {
            if c != C64::new(0.0, 0.0) {
                *out.terms.entry(idx).or_insert(C64::new(0.0, 0.0)) += c;
            }
        };
        for (idx, &c) in &self.terms {
            let n = idx[axis];
            // (1/σ)(n·H_{n−1} − ½·H_{n+1})·envelope + i·s·w·(same term)
            if n > 0 {
                let mut down = idx.clone();
                down[axis] = n - 1;
                push(down, c * (n as f64) / a.width);
            }
            let mut up = idx.clone();
            up[axis] = n + 1;
            push(up, -c / (2.0 * a.width));
            push(idx.clone(), c * C64::new(0.0, a.sign * a.modulation));
        }
        out.terms.retain(|_, v| *v != C64::new(0.0, 0.0));
        out
    }

    /// Multiplication by the coordinate `x_axis`, exact in the family.
    pub fn mul_x(&self, axis: usize) -> Self {
        let a = self.axes[axis];
        let mut out = SchwartzTestFn {
            axes: self.axes.clone(),
            terms: BTreeMap::new(),
        };
        let mut push = |idx: Vec<u32>, c: C64| {
            if c != C64::new(0.0, 0.0) {
                *out.terms.entry(idx).or_insert(C64::new(0.0, 0.0)) += c;
            }
        };
        for (idx, &c) in &self.terms {
            let n = idx[axis];
            // x = σξ + c with ξH_n = ½H_{n+1} + nH_{n−1}
            let mut up = idx.clone();
            up[axis] = n + 1;
            push(up, c * a.width / 2.0);
            if n > 0 {
                let mut down = idx.clone();
                down[axis] = n - 1;
                push(down, c * a.width * n as f64);
            }
            push(idx.clone(), c * a.center);
        }
        out
    }

    /// φ(· − shift): center shift plus the exact modulation phase.
    pub fn translate(&self, shift: &[f64]) -> Self {
        assert_eq!(shift.len(), self.dim());
        let mut out = self.clone();
        let mut phase = C64::new(1.0, 0.0);
        for (a, &b) in out.axes.iter_mut().zip(shift) {
            phase *= C64::new(0.0, -a.sign * a.modulation * b).exp();
            a.center += b;
        }
        for v in out.terms.values_mut() {
            *v *= phase;
        }
        out
    }

    /// Pointwise complex conjugate (modulation flips, coefficients conjugate).
    pub fn conj(&self) -> Self {
        let axes = self
            .axes
            .iter()
            .map(|a| Axis {
                modulation: -a.modulation,
                ..*a
            })
            .collect();
        let terms = self.terms.iter().map(|(k, v)| (k.clone(), v.conj())).collect();
        SchwartzTestFn { axes, terms }
    }

    /// Largest Hermite order appearing on any axis.
    pub fn max_order(&self) -> u32 {
        self.terms.keys().flat_map(|k| k.iter().copied()).max().unwrap_or(0)
    }

    /// True when the three spatial axes (of a 4D function) carry centered,
    /// unmodulated, equal-width pure Gaussians.
    pub fn spatially_isotropic(&self) -> bool {
        if self.dim() != 4 {
            return false;
        }
        let w = self.axes[1].width;
        let axes_ok = self.axes[1..].iter().all(|a| {
            a.center == 0.0 && a.modulation == 0.0 && (a.width - w).abs() == 0.0
        });
        let terms_ok = self.terms.keys().all(|idx| idx[1..].iter().all(|&n| n == 0));
        axes_ok && terms_ok
    }
}

/// Physicists' Hermite values H₀..H_max at a (possibly complex) argument.
pub fn hermite_ladder(t: C64, max_n: u32) -> Vec<C64> {
    let mut h = Vec::with_capacity(max_n as usize + 2);
    h.push(C64::new(1.0, 0.0));
    if max_n >= 1 {
        h.push(t * 2.0);
    }
    for n in 1..max_n {
        let next = h[n as usize] * t * 2.0 - h[n as usize - 1] * (2.0 * n as f64);
        h.push(next);
    }
    h
}

/// Closed-form line integral of one Hermite–Gaussian axis factor against a
/// plain plane wave:
/// `∫ H_n((x−c)/σ) e^{−(x−c)²/(2σ²)} e^{i s w x} e^{i f x} dx
///  = √(2π)·σ·iⁿ·H_n(σg)·e^{−σ²g²/2}·e^{igc}` with `g = f + s·w`.
pub fn axis_line_transform(axis: &Axis, n: u32, freq: f64) -> C64 {
    let g = freq + axis.sign * axis.modulation;
    let sg = axis.width * g;
    let h = hermite_ladder(C64::new(sg, 0.0), n);
    (2.0 * std::f64::consts::PI).sqrt()
        * axis.width
        * C64::new(0.0, 1.0).powu(n)
        * h[n as usize]
        * (-sg * sg / 2.0).exp()
        * C64::new(0.0, g * axis.center).exp()
}

// ---------------------------------------------------------------------------
// seminorms
// ---------------------------------------------------------------------------

/// Schwartz seminorm `|φ|_k = max_{|α|,|β| ≤ k} Σ_terms Π_axis sup_x |x^{β_i} ∂^{α_i}(…)|`,
/// computed per Hermite term with exact per-axis factorization; exact for
/// one-term functions and an upper envelope (still a seminorm) otherwise.
pub fn seminorm(phi: &SchwartzTestFn, k: usize) -> Result<f64, QuadError> {
    if k > 6 {
        return Err(QuadError::OrderTooHigh(k));
    }
    let dim = phi.dim();
    let alphas = multi_indices(dim, k);
    let mut best = 0.0f64;
    for alpha in &alphas {
        for beta in &alphas {
            let mut total = 0.0;
            for (idx, &c) in &phi.terms {
                let mut prod = c.norm();
                for axis in 0..dim {
                    prod *= axis_sup(&phi.axes[axis], idx[axis], alpha[axis], beta[axis]);
                }
                total += prod;
            }
            best = best.max(total);
        }
    }
    Ok(best)
}

/// All multi-indices of the given dimension with total degree ≤ k.
pub fn multi_indices(dim: usize, k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; dim];
    fn rec(axis: usize, budget: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if axis == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=budget {
            cur[axis] = v as u32;
            rec(axis + 1, budget - v, cur, out);
        }
    }
    rec(0, k, &mut cur, &mut out);
    out
}

/// sup over ℝ of |x^beta · d^alpha/dx^alpha (H_n((x−c)/σ)e^{−(x−c)²/(2σ²)}e^{iswx})|.
fn axis_sup(axis: &Axis, n: u32, alpha: u32, beta: u32) -> f64 {
    // Build the derivative's 1D Hermite map; modulation only rotates phases
    // except for the i·s·w cross terms which stay in the map.
    let mut map: BTreeMap<u32, C64> = BTreeMap::new();
    map.insert(n, C64::new(1.0, 0.0));
    for _ in 0..alpha {
        let mut next: BTreeMap<u32, C64> = BTreeMap::new();
        let mut push = |m: u32, c: C64| {
            if c != C64::new(0.0, 0.0) {
                *next.entry(m).or_insert(C64::new(0.0, 0.0)) += c;
            }
        };
        for (&m, &c) in &map {
            if m > 0 {
                push(m - 1, c * (m as f64) / axis.width);
            }
            push(m + 1, -c / (2.0 * axis.width));
            push(m, c * C64::new(0.0, axis.sign * axis.modulation));
        }
        map = next;
    }
    let n_max = map.keys().copied().max().unwrap_or(0);
    let reach = axis.width * ((2.0 * (n_max + beta) as f64 + 1.0).sqrt() + 6.0);
    let lo = (axis.center - reach).min(-reach);
    let hi = (axis.center + reach).max(reach);
    let f = |x: f64| -> f64 {
        let t = C64::new((x - axis.center) / axis.width, 0.0);
        let h = hermite_ladder(t, n_max);
        let mut acc = C64::new(0.0, 0.0);
        for (&m, &c) in &map {
            acc += c * h[m as usize];
        }
        acc.norm() * (-(t.re * t.re) / 2.0).exp() * x.abs().powi(beta as i32)
    };
    let coarse = 2048;
    let h = (hi - lo) / coarse as f64;
    let mut best = 0.0f64;
    let mut best_x = lo;
    for i in 0..=coarse {
        let x = lo + i as f64 * h;
        let v = f(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    // local refinement
    let mut lo2 = best_x - 2.0 * h;
    let mut hi2 = best_x + 2.0 * h;
    for _ in 0..3 {
        let step = (hi2 - lo2) / 64.0;
        let mut b = best;
        let mut bx = best_x;
        for i in 0..=64 {
            let x = lo2 + i as f64 * step;
            let v = f(x);
            if v > b {
                b = v;
                bx = x;
            }
        }
        best = b;
        best_x = bx;
        lo2 = best_x - 2.0 * step;
        hi2 = best_x + 2.0 * step;
    }
    best
}

// ---------------------------------------------------------------------------
// contraction integrals
// ---------------------------------------------------------------------------

/// Momentum-space kernel pair carried by one contraction: the annihilation
/// part of the left factor against the creation part of the right one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelPairSpec {
    pub field: crate::fields::FieldId,
    pub left_dagger: bool,
    pub right_dagger: bool,
    pub left_component: usize,
    pub right_component: usize,
}

impl From<&PairingDescriptor> for KernelPairSpec {
    fn from(p: &PairingDescriptor) -> Self {
        KernelPairSpec {
            field: p.field,
            left_dagger: p.left_dagger,
            right_dagger: p.right_dagger,
            left_component: p.left_component,
            right_component: p.right_component,
        }
    }
}

/// Label-summed momentum density of one contraction at momentum `p`:
/// `Σ_s krein(s) · mult_ann(left) · mult_cre(right)`.
pub fn pairing_mode_factor(spec: &FieldSpec, pair: &KernelPairSpec, p: &Vector3<f64>) -> C64 {
    use crate::fields::Freq;
    let mut acc = C64::new(0.0, 0.0);
    for &s in spec.annihilation_labels(pair.left_dagger) {
        if !spec.creation_labels(pair.right_dagger).contains(&s) {
            continue;
        }
        let a = spec.multiplier(pair.left_dagger, Freq::Annihilation, s, p, pair.left_component);
        let c = spec.multiplier(pair.right_dagger, Freq::Creation, s, p, pair.right_component);
        acc += a * c * spec.krein_sign(s);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadRule {
    /// Midpoint rule on the Cartesian box `[−R, R]^{3q}`.
    TensorMidpoint,
    /// Exact reduction of a two-momentum integral to (r′, r″, θ) for
    /// spatially isotropic test functions and direction-independent kernels.
    RadialIsotropic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Half-width R of the momentum box (or radial cutoff).
    pub half_width: f64,
    /// Points per axis; must be even and ≥ 8.
    pub points_per_axis: usize,
    pub rule: QuadRule,
    /// Relative tolerance driving the non-convergence flag.
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            half_width: 10.0,
            points_per_axis: 32,
            rule: QuadRule::TensorMidpoint,
            tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionValue {
    pub value: C64,
    /// Absolute difference between the two finest refinements.
    pub err: f64,
}

/// ⟨κ-product, φ ⊗ χ⟩: integral over q momenta of the pairing densities
/// against `(2π)²φ̃(−ΣE, −Σ𝐩) · (2π)²χ̃(+ΣE, +Σ𝐩)`, energies ε-deformed for
/// massless fields. Runs two refinements and reports their difference.
pub fn contract_integral(
    roster: &FieldRoster,
    pairs: &[KernelPairSpec],
    phi: &SchwartzTestFn,
    chi: &SchwartzTestFn,
    eps: f64,
    spec: &QuadratureSpec,
) -> Result<ContractionValue, QuadError> {
    if phi.dim() != 4 || chi.dim() != 4 {
        return Err(QuadError::BadDimension(phi.dim().min(chi.dim())));
    }
    if spec.points_per_axis < 8 || !spec.points_per_axis.is_multiple_of(2) {
        return Err(QuadError::BadPointCount(spec.points_per_axis));
    }
    let coarse = integrate_once(roster, pairs, phi, chi, eps, spec, spec.points_per_axis)?;
    let fine = integrate_once(roster, pairs, phi, chi, eps, spec, spec.points_per_axis * 2)?;
    let err = (fine - coarse).norm();
    if err > 10.0 * spec.tolerance * (fine.norm() + 1e-6) {
        return Err(QuadError::NonConvergent {
            value: fine,
            err,
            tolerance: spec.tolerance,
        });
    }
    Ok(ContractionValue { value: fine, err })
}

fn integrate_once(
    roster: &FieldRoster,
    pairs: &[KernelPairSpec],
    phi: &SchwartzTestFn,
    chi: &SchwartzTestFn,
    eps: f64,
    spec: &QuadratureSpec,
    n: usize,
) -> Result<C64, QuadError> {
    let phi_t = phi.fourier();
    let chi_t = chi.fourier();
    let two_pi_sq = crate::fields::TWO_PI * crate::fields::TWO_PI;
    let weight_fns = |e_tot: f64, p_tot: &Vector3<f64>| -> C64 {
        let a = phi_t.eval(&[-e_tot, -p_tot.x, -p_tot.y, -p_tot.z]);
        let b = chi_t.eval(&[e_tot, p_tot.x, p_tot.y, p_tot.z]);
        a * b * two_pi_sq * two_pi_sq
    };
    match spec.rule {
        QuadRule::TensorMidpoint => {
            let q = pairs.len();
            let dims = 3 * q;
            let h = 2.0 * spec.half_width / n as f64;
            let mut total = C64::new(0.0, 0.0);
            let mut idx = vec![0usize; dims];
            loop {
                let mut p_tot = Vector3::zeros();
                let mut e_tot = 0.0;
                let mut density = C64::new(1.0, 0.0);
                for (qi, pair) in pairs.iter().enumerate() {
                    let p = Vector3::new(
                        -spec.half_width + (idx[3 * qi] as f64 + 0.5) * h,
                        -spec.half_width + (idx[3 * qi + 1] as f64 + 0.5) * h,
                        -spec.half_width + (idx[3 * qi + 2] as f64 + 0.5) * h,
                    );
                    let fspec = roster.get(pair.field);
                    density *= pairing_mode_factor(fspec, pair, &p);
                    e_tot += fspec.energy(&p, eps);
                    p_tot += p;
                }
                total += density * weight_fns(e_tot, &p_tot);
                // advance the mixed-radix counter
                let mut k = 0;
                loop {
                    if k == dims {
                        return Ok(total * h.powi(dims as i32));
                    }
                    idx[k] += 1;
                    if idx[k] < n {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
        }
        QuadRule::RadialIsotropic => {
            if pairs.len() != 2 {
                return Err(QuadError::RuleUnsupported(format!(
                    "needs exactly 2 momenta, got {}",
                    pairs.len()
                )));
            }
            if !phi.spatially_isotropic() || !chi.spatially_isotropic() {
                return Err(QuadError::RuleUnsupported(
                    "test functions not spatially isotropic".to_owned(),
                ));
            }
            for pair in pairs {
                if roster.get(pair.field).kind == FieldKind::Dirac {
                    return Err(QuadError::RuleUnsupported(
                        "spinor kernels are direction-dependent".to_owned(),
                    ));
                }
            }
            // ∫d³p′d³p″ F(r′, r″, |𝐩′+𝐩″|) = 8π² ∫∫∫ r′² r″² sinθ F dr′ dr″ dθ
            let spec_a = roster.get(pairs[0].field);
            let spec_b = roster.get(pairs[1].field);
            let hr = spec.half_width / n as f64;
            let ht = std::f64::consts::PI / n as f64;
            let mut total = C64::new(0.0, 0.0);
            for i in 0..n {
                let r1 = (i as f64 + 0.5) * hr;
                let p1 = Vector3::new(0.0, 0.0, r1);
                let d1 = pairing_mode_factor(spec_a, &pairs[0], &p1);
                let e1 = spec_a.energy(&p1, eps);
                for j in 0..n {
                    let r2 = (j as f64 + 0.5) * hr;
                    let p2 = Vector3::new(0.0, 0.0, r2);
                    let d2 = pairing_mode_factor(spec_b, &pairs[1], &p2);
                    let e2 = spec_b.energy(&p2, eps);
                    for t in 0..n {
                        let theta = (t as f64 + 0.5) * ht;
                        let rho = (r1 * r1 + r2 * r2 + 2.0 * r1 * r2 * theta.cos()).sqrt();
                        let jac = 8.0 * std::f64::consts::PI.powi(2) * r1 * r1 * r2 * r2 * theta.sin();
                        total += d1 * d2 * weight_fns(e1 + e2, &Vector3::new(0.0, 0.0, rho)) * jac;
                    }
                }
            }
            Ok(total * hr * hr * ht)
        }
    }
}

/// Finite Riemann sum of the same contraction over explicit grid points with
/// cell volume ΔV (the truncated-Fock surrogate of [`contract_integral`]).
pub fn mode_sum_contraction(
    roster: &FieldRoster,
    points: &[Vector3<f64>],
    dv: f64,
    pairs: &[KernelPairSpec],
    phi: &SchwartzTestFn,
    chi: &SchwartzTestFn,
    eps: f64,
) -> C64 {
    let phi_t = phi.fourier();
    let chi_t = chi.fourier();
    let two_pi_sq = crate::fields::TWO_PI * crate::fields::TWO_PI;
    let q = pairs.len();
    let mut idx = vec![0usize; q];
    let mut total = C64::new(0.0, 0.0);
    if points.is_empty() {
        return total;
    }
    loop {
        let mut p_tot = Vector3::zeros();
        let mut e_tot = 0.0;
        let mut density = C64::new(1.0, 0.0);
        for (qi, pair) in pairs.iter().enumerate() {
            let p = points[idx[qi]];
            let fspec = roster.get(pair.field);
            density *= pairing_mode_factor(fspec, pair, &p);
            e_tot += fspec.energy(&p, eps);
            p_tot += p;
        }
        let a = phi_t.eval(&[-e_tot, -p_tot.x, -p_tot.y, -p_tot.z]);
        let b = chi_t.eval(&[e_tot, p_tot.x, p_tot.y, p_tot.z]);
        total += density * a * b * two_pi_sq * two_pi_sq * dv.powi(q as i32);
        let mut k = 0;
        loop {
            if k == q {
                return total;
            }
            idx[k] += 1;
            if idx[k] < points.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// ε-limit scan
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EpsSample {
    pub eps: f64,
    pub value_re: f64,
    pub value_im: f64,
    /// |I_ε − I₀| on the shared node set.
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitScan {
    pub i0: ContractionValue,
    pub table: Vec<EpsSample>,
    /// Least-squares slope of log|I_ε − I₀| against log ε; `None` when the
    /// kernels are all massive (the deformation is inert).
    pub slope: Option<f64>,
    pub massive_inert: bool,
}

/// Evaluates the contraction at ε = 0 and along a decreasing ε list on one
/// fixed node set, so quadrature bias cancels in the differences.
pub fn limit_contraction(
    roster: &FieldRoster,
    pairs: &[KernelPairSpec],
    phi: &SchwartzTestFn,
    chi: &SchwartzTestFn,
    eps_list: &[f64],
    spec: &QuadratureSpec,
) -> Result<LimitScan, QuadError> {
    if eps_list.len() < 3
        || eps_list.iter().any(|&e| e <= 0.0)
        || eps_list.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(QuadError::BadEpsList);
    }
    let massive_inert = pairs.iter().all(|p| !roster.get(p.field).is_massless());
    let i0 = contract_integral(roster, pairs, phi, chi, 0.0, spec)?;
    // Fixed nodes: reuse the fine refinement count for the whole scan.
    let n_fine = spec.points_per_axis * 2;
    let i0_fine = integrate_once(roster, pairs, phi, chi, 0.0, spec, n_fine)?;
    let mut table = Vec::new();
    for &eps in eps_list {
        let v = if massive_inert {
            i0_fine
        } else {
            integrate_once(roster, pairs, phi, chi, eps, spec, n_fine)?
        };
        table.push(EpsSample {
            eps,
            value_re: v.re,
            value_im: v.im,
            abs_diff: (v - i0_fine).norm(),
        });
    }
    let slope = if massive_inert {
        None
    } else {
        let pts: Vec<(f64, f64)> = table
            .iter()
            .filter(|s| s.abs_diff > 0.0)
            .map(|s| (s.eps.ln(), s.abs_diff.ln()))
            .collect();
        if pts.len() < 2 {
            None
        } else {
            Some(least_squares_slope(&pts))
        }
    };
    Ok(LimitScan {
        i0,
        table,
        slope,
        massive_inert,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldSpec;
    use approx::assert_abs_diff_eq;

    fn g1(center: f64, width: f64, w: f64) -> SchwartzTestFn {
        SchwartzTestFn::gaussian(&[center], &[width])
            .unwrap()
            .with_modulation(&[w])
            .unwrap()
    }

    #[test]
    fn gaussian_eval() {
        let phi = SchwartzTestFn::gaussian(&[0.0], &[1.0]).unwrap();
        assert_abs_diff_eq!(phi.eval(&[0.0]).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi.eval(&[1.0]).re, (-0.5f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn fourier_matches_direct_quadrature() {
        // 1D, time sign +1, with center/width/modulation and a Hermite term
        let phi = g1(0.7, 1.3, 0.4).with_term(&[2], C64::new(0.5, -0.2));
        let ft = phi.fourier();
        for &k in &[0.0, 0.3, -1.1, 2.0] {
            // direct (2π)^{-1/2} ∫ φ(x) e^{ikx} dx by midpoint
            let n = 40_000;
            let lo = -30.0;
            let hi = 30.0;
            let h = (hi - lo) / n as f64;
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                let x = lo + (i as f64 + 0.5) * h;
                acc += phi.eval(&[x]) * C64::new(0.0, k * x).exp();
            }
            acc *= h / (2.0 * std::f64::consts::PI).sqrt();
            let got = ft.eval(&[k]);
            assert!((got - acc).norm() < 1e-10, "k={k}: {got} vs {acc}");
        }
    }

    #[test]
    fn fourier_spatial_sign() {
        // 3D spatial: transform uses e^{−i𝐤·𝐱}
        let phi = SchwartzTestFn::gaussian(&[0.5, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        let ft = phi.fourier();
        let k = [0.7, 0.0, 0.0];
        // 1D factorization: ∫e^{−ikx} Gaussian(x−c) dx /√(2π) = e^{−ikc}e^{−k²/2}
        let want = C64::new(0.0, -k[0] * 0.5).exp() * (-k[0] * k[0] / 2.0f64).exp();
        assert!((ft.eval(&k) - want).norm() < 1e-12);
    }

    #[test]
    fn double_fourier_is_reflection() {
        let phi = g1(0.3, 0.8, -0.6).with_term(&[1], C64::new(0.0, 1.0));
        let ff = phi.fourier().fourier();
        for &x in &[0.0, 0.4, -1.2] {
            let want = phi.eval(&[-x]);
            assert!((ff.eval(&[x]) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn modulation_shifts_transform() {
        let phi = g1(0.2, 1.1, 0.0).with_term(&[3], C64::new(1.0, 0.0));
        let w = 0.9;
        let modulated = phi.clone().with_modulation(&[w]).unwrap();
        let ft = phi.fourier();
        let ft_mod = modulated.fourier();
        for &k in &[0.0, 0.5, -1.3] {
            let want = ft.eval(&[k + w]);
            assert!((ft_mod.eval(&[k]) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_and_mul_x_match_finite_difference() {
        let phi = g1(0.4, 0.9, 0.7).with_term(&[2], C64::new(0.3, 0.1));
        let d = phi.derivative(0);
        let h = 1e-5;
        for &x in &[0.0, 0.8, -1.5] {
            let fd = (phi.eval(&[x + h]) - phi.eval(&[x - h])) / (2.0 * h);
            assert!((d.eval(&[x]) - fd).norm() < 1e-8);
            let mx = phi.mul_x(0);
            assert!((mx.eval(&[x]) - phi.eval(&[x]) * x).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_becomes_momentum_factor() {
        // transform of ∂φ = −i·s·k·φ̃ with our sign convention:
        // ∂̃φ(k) = (2π)^{−1/2}∫φ′ e^{iskx} = −is·k·φ̃(k)
        let phi = g1(0.0, 1.0, 0.3).with_term(&[1], C64::new(0.4, 0.0));
        let left = phi.derivative(0).fourier();
        let right = phi.fourier();
        for &k in &[0.2, -0.9, 1.7] {
            let want = right.eval(&[k]) * C64::new(0.0, -k);
            assert!((left.eval(&[k]) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn translation_exact() {
        let phi = g1(0.1, 0.7, 1.1).with_term(&[2], C64::new(0.2, 0.2));
        let b = 0.63;
        let shifted = phi.translate(&[b]);
        for &x in &[0.0, 0.5, -0.4] {
            assert!((shifted.eval(&[x]) - phi.eval(&[x - b])).norm() < 1e-13);
        }
    }

    #[test]
    fn conj_pointwise() {
        let phi = g1(0.1, 0.7, 1.1).with_term(&[1], C64::new(0.2, -0.5));
        for &x in &[0.0, 0.5, -0.4] {
            assert!((phi.conj().eval(&[x]) - phi.eval(&[x]).conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn axis_line_transform_matches_quadrature() {
        let axis = Axis {
            center: 0.4,
            width: 1.2,
            modulation: 0.6,
            sign: -1.0,
        };
        for (n, freq) in [(0u32, 0.3), (2, -0.8), (3, 1.4)] {
            let n_pts = 60_000;
            let (lo, hi) = (-40.0, 40.0);
            let h = (hi - lo) / n_pts as f64;
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n_pts {
                let x = lo + (i as f64 + 0.5) * h;
                let xi = C64::new((x - axis.center) / axis.width, 0.0);
                let herm = hermite_ladder(xi, n)[n as usize];
                let gauss = (-(xi.re * xi.re) / 2.0).exp();
                let phase = C64::new(0.0, axis.sign * axis.modulation * x + freq * x).exp();
                acc += herm * gauss * phase;
            }
            acc *= h;
            let closed = axis_line_transform(&axis, n, freq);
            assert!((closed - acc).norm() < 1e-9, "n={n} freq={freq}: {closed} vs {acc}");
        }
    }

    #[test]
    fn seminorm_properties() {
        let phi = SchwartzTestFn::gaussian(&[0.0], &[1.0]).unwrap();
        let s0 = seminorm(&phi, 0).unwrap();
        assert_abs_diff_eq!(s0, 1.0, epsilon = 1e-6);
        let s1 = seminorm(&phi, 1).unwrap();
        let s2 = seminorm(&phi, 2).unwrap();
        assert!(s0 <= s1 && s1 <= s2, "monotone in order");
        let scaled = phi.scale(C64::new(3.0, 0.0));
        assert_abs_diff_eq!(seminorm(&scaled, 1).unwrap(), 3.0 * s1, epsilon = 1e-9);
        assert!(seminorm(&phi, 7).is_err());
    }

    fn scalar_pair(roster: &FieldRoster, name: &str) -> KernelPairSpec {
        KernelPairSpec {
            field: roster.by_name(name).unwrap(),
            left_dagger: false,
            right_dagger: false,
            left_component: 0,
            right_component: 0,
        }
    }

    #[test]
    fn single_contraction_quadrature_consistency() {
        let mut roster = FieldRoster::new();
        roster.register(FieldSpec::scalar("A", 1.0)).unwrap();
        let pair = scalar_pair(&roster, "A");
        let phi = SchwartzTestFn::gaussian(&[0.0; 4], &[1.0; 4]).unwrap();
        let chi = SchwartzTestFn::gaussian(&[0.4, 0.0, 0.0, 0.0], &[1.0; 4]).unwrap();
        let spec = QuadratureSpec {
            half_width: 8.0,
            points_per_axis: 32,
            ..Default::default()
        };
        let v = contract_integral(&roster, &[pair], &phi, &chi, 0.0, &spec).unwrap();
        // convergence is geometric with rate set by the √(p²+m²) branch
        // point: err ≈ C·e^(−2πm/h)
        assert!(v.err < 1e-3 * (v.value.norm() + 1e-6), "converged: {:?}", v);
        // against an explicit grid Riemann sum matching the fine nodes
        let n = 64;
        let h = 2.0 * spec.half_width / n as f64;
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    pts.push(Vector3::new(
                        -spec.half_width + (i as f64 + 0.5) * h,
                        -spec.half_width + (j as f64 + 0.5) * h,
                        -spec.half_width + (k as f64 + 0.5) * h,
                    ));
                }
            }
        }
        let ms = mode_sum_contraction(&roster, &pts, h.powi(3), &[pair], &phi, &chi, 0.0);
        assert!((ms - v.value).norm() < 1e-10, "mode sum {ms} vs {:?}", v.value);
    }

    #[test]
    fn eps_list_validation() {
        let mut roster = FieldRoster::new();
        roster.register(FieldSpec::scalar("A", 1.0)).unwrap();
        let pair = scalar_pair(&roster, "A");
        let phi = SchwartzTestFn::gaussian(&[0.0; 4], &[1.0; 4]).unwrap();
        let spec = QuadratureSpec::default();
        assert!(matches!(
            limit_contraction(&roster, &[pair], &phi, &phi, &[0.4, 0.5, 0.1], &spec),
            Err(QuadError::BadEpsList)
        ));
        assert!(matches!(
            limit_contraction(&roster, &[pair], &phi, &phi, &[0.4, 0.2], &spec),
            Err(QuadError::BadEpsList)
        ));
    }

    #[test]
    fn massive_scan_is_inert() {
        let mut roster = FieldRoster::new();
        roster.register(FieldSpec::scalar("A", 1.0)).unwrap();
        let pair = scalar_pair(&roster, "A");
        let phi = SchwartzTestFn::gaussian(&[0.0; 4], &[1.0; 4]).unwrap();
        let spec = QuadratureSpec {
            half_width: 8.0,
            points_per_axis: 32,
            ..Default::default()
        };
        let scan = limit_contraction(&roster, &[pair], &phi, &phi, &[0.4, 0.2, 0.1], &spec).unwrap();
        assert!(scan.massive_inert);
        assert!(scan.slope.is_none());
        assert!(scan.table.iter().all(|s| s.abs_diff == 0.0));
    }
}
