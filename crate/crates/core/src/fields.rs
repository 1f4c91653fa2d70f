//! Free-field data: statistics, spin/polarization labels, masses, and the
//! exact plane-wave kernels that sit between smeared field operators and
//! ladder operators.
//!
//! Conventions (fixed once, used everywhere):
//! - metric signature (+,−,−,−); `p·x = p⁰x⁰ − 𝐩·𝐱`
//! - photon polarization metric `g = diag(−1,+1,+1,+1)` in the Krein sense
//! - chiral Dirac matrices: `γ⁰` off-diagonal identity blocks,
//!   `γᵏ = [[0, −σₖ], [σₖ, 0]]`, so `γ⁰γ⁰ = 1`, `γᵏγᵏ = −1`
//! - annihilation kernels carry `e^{−ip·x}`, creation kernels `e^{+ip·x}`

use nalgebra::{Matrix2, Matrix4, Vector3, Vector4};
use num_complex::Complex;
use thiserror::Error;

pub type C64 = Complex<f64>;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Minkowski / Clifford metric diagonal, index order (0,1,2,3).
pub const MINKOWSKI_DIAG: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// Polarization-space metric for the gauge field: `g_{νμ} = diag(−1,1,1,1)`.
pub const PHOTON_METRIC_DIAG: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("duplicate field name {0:?}")]
    DuplicateName(String),
    #[error("unknown field name {0:?}")]
    UnknownName(String),
    #[error("label {label} not declared for field {field:?}")]
    UnknownLabel { field: String, label: u8 },
    #[error("component {component} out of range for field {field:?} ({components} components)")]
    UnknownComponent {
        field: String,
        component: usize,
        components: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Statistics {
    Bose,
    Fermi,
}

/// Which free field a spec describes; decides the kernel formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FieldKind {
    /// Neutral scalar; single component, single label.
    Scalar,
    /// Massless vector field in the Feynman-gauge Krein representation:
    /// four polarization labels ν = 0..3, temporal label carries Krein sign −1.
    Photon,
    /// Dirac field: four spinor components; labels 1,2 annihilate particles
    /// (u-spinors), labels 3,4 create antiparticles (v-spinors).
    Dirac,
}

/// Frequency part of a kernel: annihilation (negative frequency, `e^{−ipx}`)
/// or creation (positive frequency, `e^{+ipx}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Freq {
    Annihilation,
    Creation,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub kind: FieldKind,
    pub statistics: Statistics,
    pub mass: f64,
    /// Number of spacetime/spinor components the smeared operator exposes.
    pub components: usize,
    /// Declared spin/polarization labels (mode labels on the grid).
    pub labels: Vec<u8>,
}

impl FieldSpec {
    pub fn scalar(name: &str, mass: f64) -> Self {
        FieldSpec {
            name: name.to_owned(),
            kind: FieldKind::Scalar,
            statistics: Statistics::Bose,
            mass,
            components: 1,
            labels: vec![0],
        }
    }

    /// Scalar-kernel field with chosen statistics. A Fermi scalar is not a
    /// physical field; it exists so the combinatorial engine can be exercised
    /// against the matrix oracle with small anticommuting mode counts.
    pub fn scalar_with_statistics(name: &str, mass: f64, statistics: Statistics) -> Self {
        FieldSpec {
            statistics,
            ..Self::scalar(name, mass)
        }
    }

    pub fn photon() -> Self {
        FieldSpec {
            name: "photon".to_owned(),
            kind: FieldKind::Photon,
            statistics: Statistics::Bose,
            mass: 0.0,
            components: 4,
            labels: vec![0, 1, 2, 3],
        }
    }

    pub fn dirac(mass: f64) -> Self {
        FieldSpec {
            name: "psi".to_owned(),
            kind: FieldKind::Dirac,
            statistics: Statistics::Fermi,
            mass,
            components: 4,
            labels: vec![1, 2, 3, 4],
        }
    }

    pub fn is_massless(&self) -> bool {
        self.mass == 0.0
    }

    /// On-shell energy with the mass deformation for massless fields:
    /// `√(|𝐩|² + m_eff²)` where `m_eff = max(mass, ε)` if massless, else mass.
    pub fn energy(&self, p: &Vector3<f64>, eps: f64) -> f64 {
        let m_eff = if self.is_massless() { self.mass.max(eps) } else { self.mass };
        (p.norm_squared() + m_eff * m_eff).sqrt()
    }

    /// Krein sign of a single mode label: −1 for the temporal photon
    /// polarization, +1 otherwise. Creation operators in assembled field
    /// operators are weighted by this sign so that commutators of smeared
    /// photon fields come out ∝ g_{μν}.
    pub fn krein_sign(&self, label: u8) -> f64 {
        if self.kind == FieldKind::Photon && label == 0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Labels whose annihilation part is populated for this field
    /// (`dagger` selects the conjugate field).
    pub fn annihilation_labels(&self, dagger: bool) -> &[u8] {
        match self.kind {
            FieldKind::Dirac => {
                if dagger {
                    &self.labels[2..4] // ψ⁺ annihilates antiparticles
                } else {
                    &self.labels[0..2] // ψ annihilates particles
                }
            }
            _ => &self.labels,
        }
    }

    /// Labels whose creation part is populated for this field.
    pub fn creation_labels(&self, dagger: bool) -> &[u8] {
        match self.kind {
            FieldKind::Dirac => {
                if dagger {
                    &self.labels[0..2] // ψ⁺ creates particles
                } else {
                    &self.labels[2..4] // ψ creates antiparticles
                }
            }
            _ => &self.labels,
        }
    }

    /// Momentum-space multiplier of the plane-wave kernel: everything except
    /// the `e^{∓ip·x}` factor. Zero for labels outside the part's support.
    ///
    /// The massless ε-deformation touches only the phase (see [`kernel_eval`]);
    /// multipliers always use the undeformed on-shell energy.
    pub fn multiplier(&self, dagger: bool, freq: Freq, label: u8, p: &Vector3<f64>, component: usize) -> C64 {
        let e = self.energy(p, 0.0);
        let norm = TWO_PI.powf(1.5);
        match self.kind {
            FieldKind::Scalar => C64::new(1.0 / (norm * (2.0 * e).sqrt()), 0.0),
            FieldKind::Photon => {
                // Diagonal in (label ν, component μ); both frequency parts equal.
                if label as usize == component {
                    C64::new(PHOTON_METRIC_DIAG[component] / (norm * (2.0 * e).sqrt()), 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            FieldKind::Dirac => {
                let part_labels = match freq {
                    Freq::Annihilation => self.annihilation_labels(dagger),
                    Freq::Creation => self.creation_labels(dagger),
                };
                if !part_labels.contains(&label) {
                    return C64::new(0.0, 0.0);
                }
                let spinor = match (dagger, freq) {
                    // ψ: annihilation carries u_s (s∈{1,2}), creation v_{s−2} (s∈{3,4})
                    (false, Freq::Annihilation) => dirac_u(label, p, self.mass),
                    (false, Freq::Creation) => dirac_v(label - 2, p, self.mass),
                    // ψ⁺: component-wise complex conjugates, swapped parts
                    (true, Freq::Annihilation) => dirac_v(label - 2, p, self.mass).map(|z| z.conj()),
                    (true, Freq::Creation) => dirac_u(label, p, self.mass).map(|z| z.conj()),
                };
                spinor[component] / TWO_PI.powf(1.5)
            }
        }
    }

    /// Plane-wave kernel value at spacetime point `x = (x⁰, 𝐱)`:
    /// `multiplier · e^{∓i(p⁰(ε) x⁰ − 𝐩·𝐱)}` with − for annihilation parts.
    #[allow(clippy::too_many_arguments)]
    pub fn kernel_eval(
        &self,
        dagger: bool,
        freq: Freq,
        label: u8,
        p: &Vector3<f64>,
        component: usize,
        x: &[f64; 4],
        eps: f64,
    ) -> C64 {
        let mult = self.multiplier(dagger, freq, label, p, component);
        if mult == C64::new(0.0, 0.0) {
            return mult;
        }
        let e = self.energy(p, eps);
        let phase = e * x[0] - (p.x * x[1] + p.y * x[2] + p.z * x[3]);
        let sign = match freq {
            Freq::Annihilation => -1.0,
            Freq::Creation => 1.0,
        };
        mult * C64::new(0.0, sign * phase).exp()
    }

    pub fn check_label(&self, label: u8) -> Result<(), FieldError> {
        if self.labels.contains(&label) {
            Ok(())
        } else {
            Err(FieldError::UnknownLabel {
                field: self.name.clone(),
                label,
            })
        }
    }

    pub fn check_component(&self, component: usize) -> Result<(), FieldError> {
        if component < self.components {
            Ok(())
        } else {
            Err(FieldError::UnknownComponent {
                field: self.name.clone(),
                component,
                components: self.components,
            })
        }
    }
}

/// Index of a field inside a [`FieldRoster`]; the identity used by factors,
/// pairings and mode bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct FieldId(pub usize);

/// The set of fields participating in a run. Field order is registration
/// order and fixes the lexicographic mode order on a grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldRoster {
    fields: Vec<FieldSpec>,
}

impl FieldRoster {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, spec: FieldSpec) -> Result<FieldId, FieldError> {
        if self.fields.iter().any(|f| f.name == spec.name) {
            return Err(FieldError::DuplicateName(spec.name));
        }
        self.fields.push(spec);
        Ok(FieldId(self.fields.len() - 1))
    }

    pub fn get(&self, id: FieldId) -> &FieldSpec {
        &self.fields[id.0]
    }

    pub fn by_name(&self, name: &str) -> Result<FieldId, FieldError> {
        self.fields
            .iter()
            .position(|f| f.name == name)
            .map(FieldId)
            .ok_or_else(|| FieldError::UnknownName(name.to_owned()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (FieldId, &FieldSpec)> {
        self.fields.iter().enumerate().map(|(i, f)| (FieldId(i), f))
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

pub fn pauli_matrices() -> [Matrix2<C64>; 3] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        Matrix2::new(z, o, o, z),
        Matrix2::new(z, -i, i, z),
        Matrix2::new(o, z, z, -o),
    ]
}

/// Chiral (Weyl) representation γ-matrices, index order (γ⁰, γ¹, γ², γ³).
pub fn gamma_matrices() -> [Matrix4<C64>; 4] {
    let mut out = [Matrix4::zeros(); 4];
    let one = C64::new(1.0, 0.0);
    // γ⁰: off-diagonal 2×2 identity blocks
    out[0][(0, 2)] = one;
    out[0][(1, 3)] = one;
    out[0][(2, 0)] = one;
    out[0][(3, 1)] = one;
    let sigma = pauli_matrices();
    for k in 0..3 {
        for r in 0..2 {
            for c in 0..2 {
                out[k + 1][(r, 2 + c)] = -sigma[k][(r, c)];
                out[k + 1][(2 + r, c)] = sigma[k][(r, c)];
            }
        }
    }
    out
}

/// `𝐩·σ / (E + m)`, the 2×2 block mixing upper and lower Weyl spinors.
fn momentum_block(p: &Vector3<f64>, m: f64) -> Matrix2<C64> {
    let sigma = pauli_matrices();
    let e = (p.norm_squared() + m * m).sqrt();
    let mut x = Matrix2::zeros();
    for (k, pk) in [p.x, p.y, p.z].into_iter().enumerate() {
        x += sigma[k] * C64::new(pk / (e + m), 0.0);
    }
    x
}

fn basis_spinor(s: u8) -> nalgebra::Vector2<C64> {
    match s {
        1 => nalgebra::Vector2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        2 => nalgebra::Vector2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        _ => panic!("spin label {s} outside {{1,2}}"),
    }
}

/// Positive-frequency Dirac spinor, normalized so `u_s†u_s = 1`:
/// `u_s(𝐩) = (1/√2)√((E+m)/2E) · (χ_s + Xχ_s ; χ_s − Xχ_s)` with
/// `X = 𝐩·σ/(E+m)`.
pub fn dirac_u(s: u8, p: &Vector3<f64>, m: f64) -> Vector4<C64> {
    let e = (p.norm_squared() + m * m).sqrt();
    let chi = basis_spinor(s);
    let xc = momentum_block(p, m) * chi;
    let n = C64::new(((e + m) / (2.0 * e)).sqrt() / 2.0_f64.sqrt(), 0.0);
    Vector4::new(
        n * (chi[0] + xc[0]),
        n * (chi[1] + xc[1]),
        n * (chi[0] - xc[0]),
        n * (chi[1] - xc[1]),
    )
}

/// Negative-frequency Dirac spinor; lower Weyl block negated relative to `u`.
pub fn dirac_v(s: u8, p: &Vector3<f64>, m: f64) -> Vector4<C64> {
    let e = (p.norm_squared() + m * m).sqrt();
    let chi = basis_spinor(s);
    let xc = momentum_block(p, m) * chi;
    let n = C64::new(((e + m) / (2.0 * e)).sqrt() / 2.0_f64.sqrt(), 0.0);
    Vector4::new(
        n * (chi[0] + xc[0]),
        n * (chi[1] + xc[1]),
        n * (-chi[0] + xc[0]),
        n * (-chi[1] + xc[1]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn norm4(v: &Vector4<C64>) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn energy_on_shell() {
        let f = FieldSpec::scalar("phi", 3.0);
        let p = Vector3::new(4.0, 0.0, 0.0);
        assert_abs_diff_eq!(f.energy(&p, 0.0), 5.0, epsilon = 1e-15);
        // massive fields ignore eps
        assert_abs_diff_eq!(f.energy(&p, 0.7), 5.0, epsilon = 1e-15);
    }

    #[test]
    fn energy_eps_deformation_bound() {
        let ph = FieldSpec::photon();
        for &eps in &[0.4, 0.2, 0.1, 0.05] {
            for &r in &[0.0, 0.3, 1.0, 7.5] {
                let p = Vector3::new(r, 0.0, 0.0);
                let d = ph.energy(&p, eps) - ph.energy(&p, 0.0);
                assert!(d >= 0.0 && d <= eps + 1e-15, "deformation {d} vs eps {eps}");
            }
        }
    }

    #[test]
    fn clifford_relations_exact() {
        let g = gamma_matrices();
        for mu in 0..4 {
            for nu in 0..4 {
                let anti = g[mu] * g[nu] + g[nu] * g[mu];
                let expect = if mu == nu {
                    Matrix4::identity() * C64::new(2.0 * MINKOWSKI_DIAG[mu], 0.0)
                } else {
                    Matrix4::zeros()
                };
                assert_eq!(anti, expect, "anticommutator ({mu},{nu})");
            }
        }
    }

    #[test]
    fn gamma0_gammak_hermitian() {
        // Γ^μ = γ⁰γ^μ are the matrices appearing in :ψ⁺Γψ A:; all Hermitian.
        let g = gamma_matrices();
        for mu in 0..4 {
            let gm = g[0] * g[mu];
            assert_eq!(gm, gm.adjoint(), "γ⁰γ^{mu} hermitian");
        }
    }

    #[test]
    fn spinors_at_rest() {
        let p = Vector3::zeros();
        let u1 = dirac_u(1, &p, 1.0);
        let s = 1.0 / 2.0_f64.sqrt();
        for (k, want) in [(0, s), (1, 0.0), (2, s), (3, 0.0)] {
            assert_abs_diff_eq!(u1[k].re, want, epsilon = 1e-15);
            assert_abs_diff_eq!(u1[k].im, 0.0, epsilon = 1e-15);
        }
        let v1 = dirac_v(1, &p, 1.0);
        for (k, want) in [(0, s), (1, 0.0), (2, -s), (3, 0.0)] {
            assert_abs_diff_eq!(v1[k].re, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn spinor_normalization_and_dirac_equation() {
        let g = gamma_matrices();
        let m = 1.0;
        let momenta: [Vector3<f64>; 3] = [
            Vector3::new(0.3, -0.2, 0.9),
            Vector3::new(2.0, 0.0, 0.0),
            Vector3::new(-1.1, 4.0, 0.5),
        ];
        for p in momenta {
            let e = (p.norm_squared() + m * m).sqrt();
            // slash(p) = γ⁰E − γ·𝐩  (upper-index components, metric signs explicit)
            let mut slash = g[0] * C64::new(e, 0.0);
            for (k, pk) in [p.x, p.y, p.z].into_iter().enumerate() {
                slash -= g[k + 1] * C64::new(pk, 0.0);
            }
            for s in [1u8, 2] {
                let u = dirac_u(s, &p, m);
                assert_abs_diff_eq!(norm4(&u), 1.0, epsilon = 1e-12);
                let res = slash * u - u * C64::new(m, 0.0);
                assert!(norm4(&res) < 1e-12, "(slash(p) − m)u = 0 residual {}", norm4(&res));
                let v = dirac_v(s, &p, m);
                assert_abs_diff_eq!(norm4(&v), 1.0, epsilon = 1e-12);
                let res_v = slash * v + v * C64::new(m, 0.0);
                assert!(norm4(&res_v) < 1e-12, "(slash(p) + m)v = 0 residual {}", norm4(&res_v));
            }
        }
    }

    #[test]
    fn dirac_label_supports() {
        let f = FieldSpec::dirac(1.0);
        assert_eq!(f.annihilation_labels(false), &[1, 2]);
        assert_eq!(f.creation_labels(false), &[3, 4]);
        assert_eq!(f.annihilation_labels(true), &[3, 4]);
        assert_eq!(f.creation_labels(true), &[1, 2]);
        let p = Vector3::new(0.5, 0.0, 0.0);
        // ψ annihilation multiplier vanishes on v-labels and vice versa
        assert_eq!(f.multiplier(false, Freq::Annihilation, 3, &p, 0), C64::new(0.0, 0.0));
        assert_ne!(f.multiplier(false, Freq::Annihilation, 1, &p, 0), C64::new(0.0, 0.0));
        assert_eq!(f.multiplier(false, Freq::Creation, 1, &p, 0), C64::new(0.0, 0.0));
    }

    #[test]
    fn photon_kernel_values() {
        let ph = FieldSpec::photon();
        let p = Vector3::new(0.0, 0.0, 2.0);
        let x = [0.0; 4];
        let base = 1.0 / (TWO_PI.powf(1.5) * 2.0); // 1/((2π)^{3/2}·√(2·2))
        let k_temporal = ph.kernel_eval(false, Freq::Annihilation, 0, &p, 0, &x, 0.0);
        assert_abs_diff_eq!(k_temporal.re, -base, epsilon = 1e-15);
        let k_spatial = ph.kernel_eval(false, Freq::Annihilation, 3, &p, 3, &x, 0.0);
        assert_abs_diff_eq!(k_spatial.re, base, epsilon = 1e-15);
        // off-diagonal (ν, μ) vanishes
        assert_eq!(ph.kernel_eval(false, Freq::Annihilation, 1, &p, 2, &x, 0.0), C64::new(0.0, 0.0));
    }

    #[test]
    fn kernel_phases_conjugate() {
        let f = FieldSpec::scalar("phi", 1.0);
        let p = Vector3::new(0.4, -0.3, 0.2);
        let x = [1.3, -0.7, 0.2, 2.2];
        let ann = f.kernel_eval(false, Freq::Annihilation, 0, &p, 0, &x, 0.0);
        let cre = f.kernel_eval(false, Freq::Creation, 0, &p, 0, &x, 0.0);
        assert_abs_diff_eq!((ann - cre.conj()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn eps_enters_phase_only() {
        let ph = FieldSpec::photon();
        let p = Vector3::new(0.0, 0.7, 0.0);
        let x = [2.0, 0.0, 0.0, 0.0];
        let k0 = ph.kernel_eval(false, Freq::Annihilation, 1, &p, 1, &x, 0.0);
        let ke = ph.kernel_eval(false, Freq::Annihilation, 1, &p, 1, &x, 0.3);
        assert_abs_diff_eq!(k0.norm(), ke.norm(), epsilon = 1e-15);
        let dphase = (ph.energy(&p, 0.3) - ph.energy(&p, 0.0)) * x[0];
        assert_abs_diff_eq!((ke / k0).arg(), -dphase, epsilon = 1e-12);
    }

    #[test]
    fn krein_signs() {
        let ph = FieldSpec::photon();
        assert_eq!(ph.krein_sign(0), -1.0);
        assert_eq!(ph.krein_sign(1), 1.0);
        let d = FieldSpec::dirac(1.0);
        assert_eq!(d.krein_sign(3), 1.0);
    }

    #[test]
    fn roster_rejects_duplicates() {
        let mut r = FieldRoster::new();
        r.register(FieldSpec::scalar("A", 1.0)).unwrap();
        assert!(r.register(FieldSpec::scalar("A", 2.0)).is_err());
        assert!(r.by_name("A").is_ok());
        assert!(r.by_name("B").is_err());
    }
}
