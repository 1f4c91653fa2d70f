//! Matrix oracle: a truncated Fock space over a finite momentum grid.
//!
//! Modes are (field, label, grid point) in lexicographic order; Bose modes
//! carry occupation 0..=nmax, Fermi modes 0..=1 with Jordan–Wigner sign
//! strings over earlier Fermi modes. The grid surrogate of the momentum
//! δ-distribution is `δ_{pq}/ΔV`, so ladder matrices are scaled by `1/√ΔV`
//! and mode sums by `ΔV`.
//!
//! Every symbolic object in [`crate::wick`] can be evaluated here as a dense
//! matrix; agreement of symbolic expansion and plain matrix multiplication
//! is the engine's primary self-check.

use crate::fields::{FieldId, FieldKind, FieldRoster, Freq, Statistics};
use crate::quad::{KernelPairSpec, SchwartzTestFn};
use crate::wick::{FockExpansion, NormalMonomial, Part, PairingDescriptor, WickProduct};
use nalgebra::{DMatrix, Vector3};
use num_complex::Complex;
use std::collections::BTreeMap;
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type OperatorMatrix = DMatrix<C64>;

/// Hard cap on the Fock dimension; larger requests are refused instead of
/// thrashing the host.
pub const DIMENSION_CAP: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("Fock dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("slot {slot} has no test function (got {supplied})")]
    MissingSlot { slot: usize, supplied: usize },
    #[error("test function for slot {slot} must have dimension 4")]
    BadTestFnDim { slot: usize },
    #[error(transparent)]
    Field(#[from] crate::fields::FieldError),
}

/// Finite momentum grid: explicit points and the cell volume ΔV they sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeGrid {
    pub points: Vec<Vector3<f64>>,
    pub dv: f64,
    /// Bose occupation cutoff (Fermi modes always truncate at 1).
    pub nmax: u32,
}

impl ModeGrid {
    pub fn from_points(points: Vec<Vector3<f64>>, dv: f64, nmax: u32) -> Self {
        ModeGrid { points, dv, nmax }
    }

    /// Cubic grid of `n³` points with spacing `h`, offset half a cell so the
    /// origin (and its massless singularity) is never sampled.
    pub fn cubic_centered(n: usize, h: f64, nmax: u32) -> Self {
        let mut points = Vec::with_capacity(n * n * n);
        let offset = -0.5 * h * n as f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    points.push(Vector3::new(
                        offset + (i as f64 + 0.5) * h,
                        offset + (j as f64 + 0.5) * h,
                        offset + (k as f64 + 0.5) * h,
                    ));
                }
            }
        }
        ModeGrid {
            points,
            dv: h * h * h,
            nmax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mode {
    pub field: FieldId,
    pub label: u8,
    pub point: usize,
}

/// The truncated Fock space: mode table, mixed-radix state indexing, and
/// dense operator builders.
#[derive(Debug, Clone)]
pub struct FockSpace {
    pub roster: FieldRoster,
    pub grid: ModeGrid,
    pub modes: Vec<Mode>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    fermi: Vec<bool>,
    pub dim: usize,
}

impl FockSpace {
    pub fn new(roster: FieldRoster, grid: ModeGrid) -> Result<Self, FockError> {
        let mut modes = Vec::new();
        let mut dims = Vec::new();
        let mut fermi = Vec::new();
        for (id, spec) in roster.iter() {
            for &label in &spec.labels {
                for point in 0..grid.points.len() {
                    modes.push(Mode { field: id, label, point });
                    let is_fermi = spec.statistics == Statistics::Fermi;
                    fermi.push(is_fermi);
                    dims.push(if is_fermi { 2 } else { grid.nmax as usize + 1 });
                }
            }
        }
        let mut dim = 1usize;
        for &d in &dims {
            dim = dim.saturating_mul(d);
            if dim > DIMENSION_CAP {
                return Err(FockError::DimensionCap {
                    dim,
                    cap: DIMENSION_CAP,
                });
            }
        }
        let mut strides = vec![1usize; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Ok(FockSpace {
            roster,
            grid,
            modes,
            dims,
            strides,
            fermi,
            dim,
        })
    }

    pub fn occupation(&self, state: usize, mode: usize) -> usize {
        (state / self.strides[mode]) % self.dims[mode]
    }

    /// Index of the empty state.
    pub fn vacuum(&self) -> usize {
        0
    }

    pub fn mode_index(&self, field: FieldId, label: u8, point: usize) -> Option<usize> {
        self.modes
            .iter()
            .position(|m| m.field == field && m.label == label && m.point == point)
    }

    fn jordan_wigner(&self, state: usize, mode: usize) -> f64 {
        if !self.fermi[mode] {
            return 1.0;
        }
        let mut parity = 0usize;
        for k in 0..mode {
            if self.fermi[k] {
                parity += self.occupation(state, k);
            }
        }
        if parity.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Sparse triplets (row, col, value) of the annihilation operator of one
    /// mode, scaled by `1/√ΔV`.
    pub fn annihilation_triplets(&self, mode: usize) -> Vec<(usize, usize, f64)> {
        let scale = 1.0 / self.grid.dv.sqrt();
        let mut out = Vec::new();
        for s in 0..self.dim {
            let occ = self.occupation(s, mode);
            if occ == 0 {
                continue;
            }
            let val = (occ as f64).sqrt() * scale * self.jordan_wigner(s, mode);
            out.push((s - self.strides[mode], s, val));
        }
        out
    }

    pub fn annihilation(&self, mode: usize) -> OperatorMatrix {
        let mut m = OperatorMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.annihilation_triplets(mode) {
            m[(r, c)] = C64::new(v, 0.0);
        }
        m
    }

    pub fn creation(&self, mode: usize) -> OperatorMatrix {
        self.annihilation(mode).adjoint()
    }

    /// Bare ladder pair of one mode, keyed by (label, point). No Krein signs
    /// here: these satisfy textbook grid CCR/CAR.
    pub fn build_mode_ops(&self, field: FieldId) -> BTreeMap<(u8, usize), (OperatorMatrix, OperatorMatrix)> {
        let mut out = BTreeMap::new();
        for (idx, mode) in self.modes.iter().enumerate() {
            if mode.field == field {
                out.insert((mode.label, mode.point), (self.creation(idx), self.annihilation(idx)));
            }
        }
        out
    }

    /// Krein metric η: diagonal ±1, the sign `(−1)^{temporal photon
    /// occupation}`. `trivial` is set when no gauge field is registered.
    pub fn krein_metric(&self) -> KreinMetric {
        let has_photon = self
            .roster
            .iter()
            .any(|(_, spec)| spec.kind == FieldKind::Photon);
        let mut diag = vec![1.0f64; self.dim];
        if has_photon {
            for (idx, mode) in self.modes.iter().enumerate() {
                if self.roster.get(mode.field).kind == FieldKind::Photon && mode.label == 0 {
                    for (state, d) in diag.iter_mut().enumerate() {
                        if self.occupation(state, idx) % 2 == 1 {
                            *d = -*d;
                        }
                    }
                }
            }
        }
        KreinMetric {
            diag,
            trivial: !has_photon,
        }
    }

    fn check_slots(&self, testfns: &[SchwartzTestFn], max_slot: Option<usize>) -> Result<(), FockError> {
        if let Some(ms) = max_slot {
            if ms >= testfns.len() {
                return Err(FockError::MissingSlot {
                    slot: ms,
                    supplied: testfns.len(),
                });
            }
        }
        for (slot, f) in testfns.iter().enumerate() {
            if f.dim() != 4 {
                return Err(FockError::BadTestFnDim { slot });
            }
        }
        Ok(())
    }

    /// The smeared field operator
    /// `Σ_modes ΔV·(smear01·a + krein·smear10·a†)` where the smears are the
    /// plane-wave kernels paired with the test function:
    /// `smear01 = mult·(2π)²·φ̃(−E(ε), −𝐩)` and `smear10 = mult·(2π)²·φ̃(+E(ε), +𝐩)`.
    pub fn assemble_field(
        &self,
        field: FieldId,
        dagger: bool,
        component: usize,
        testfn: &SchwartzTestFn,
        eps: f64,
    ) -> Result<OperatorMatrix, FockError> {
        self.check_slots(std::slice::from_ref(testfn), Some(0))?;
        self.roster.get(field).check_component(component)?;
        let ft = testfn.fourier();
        let mut m = OperatorMatrix::zeros(self.dim, self.dim);
        self.accumulate_part(&mut m, field, dagger, component, Part::Annihilation, &ft, eps);
        self.accumulate_part(&mut m, field, dagger, component, Part::Creation, &ft, eps);
        Ok(m)
    }

    /// Adds the creation or annihilation half of a smeared field into `m`.
    #[allow(clippy::too_many_arguments)]
    fn accumulate_part(
        &self,
        m: &mut OperatorMatrix,
        field: FieldId,
        dagger: bool,
        component: usize,
        part: Part,
        ft: &SchwartzTestFn,
        eps: f64,
    ) {
        let spec = self.roster.get(field);
        let dv = self.grid.dv;
        let tp2 = crate::fields::TWO_PI * crate::fields::TWO_PI;
        for (idx, mode) in self.modes.iter().enumerate() {
            if mode.field != field {
                continue;
            }
            let p = self.grid.points[mode.point];
            let e = spec.energy(&p, eps);
            match part {
                Part::Annihilation => {
                    let mult = spec.multiplier(dagger, Freq::Annihilation, mode.label, &p, component);
                    if mult == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let smear = mult * tp2 * ft.eval(&[-e, -p.x, -p.y, -p.z]);
                    for (r, c, v) in self.annihilation_triplets(idx) {
                        m[(r, c)] += smear * v * dv;
                    }
                }
                Part::Creation => {
                    let mult = spec.multiplier(dagger, Freq::Creation, mode.label, &p, component);
                    if mult == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let smear = mult * tp2 * ft.eval(&[e, p.x, p.y, p.z]) * spec.krein_sign(mode.label);
                    for (r, c, v) in self.annihilation_triplets(idx) {
                        // creation = transpose of the (real) annihilation triplets
                        m[(c, r)] += smear * v * dv;
                    }
                }
                Part::Full => unreachable!("parts are definite here"),
            }
        }
    }

    fn part_matrix(
        &self,
        factor: &crate::wick::FieldFactor,
        ft: &SchwartzTestFn,
        eps: f64,
    ) -> OperatorMatrix {
        let mut m = OperatorMatrix::zeros(self.dim, self.dim);
        self.accumulate_part(&mut m, factor.field, factor.dagger, factor.component, factor.part, ft, eps);
        m
    }

    /// Contraction value on the grid:
    /// `Σ_modes ΔV · krein · smear01(left fn) · smear10(right fn)`.
    pub fn grid_pairing_value(
        &self,
        pairing: &PairingDescriptor,
        left_fn: &SchwartzTestFn,
        right_fn: &SchwartzTestFn,
        eps: f64,
    ) -> C64 {
        crate::quad::mode_sum_contraction(
            &self.roster,
            &self.grid.points,
            self.grid.dv,
            &[KernelPairSpec::from(pairing)],
            left_fn,
            right_fn,
            eps,
        )
    }

    /// Evaluates a refined expansion: each term contributes
    /// `coeff · Π pairing values · Π creation parts · Π annihilation parts`.
    pub fn evaluate_expression(
        &self,
        expansion: &FockExpansion,
        testfns: &[SchwartzTestFn],
        eps: f64,
    ) -> Result<OperatorMatrix, FockError> {
        let max_slot = expansion
            .terms()
            .flat_map(|t| {
                t.creations
                    .iter()
                    .chain(&t.annihilations)
                    .map(|f| f.slot)
                    .chain(t.pairings.iter().flat_map(|p| [p.left_slot, p.right_slot]))
            })
            .max();
        self.check_slots(testfns, max_slot)?;
        let fts: Vec<SchwartzTestFn> = testfns.iter().map(|f| f.fourier()).collect();
        let tp2 = crate::fields::TWO_PI * crate::fields::TWO_PI;

        // factor-part matrices and pairing values are shared across terms
        let mut part_cache: BTreeMap<crate::wick::FieldFactor, OperatorMatrix> = BTreeMap::new();
        let mut pair_cache: BTreeMap<PairingDescriptor, C64> = BTreeMap::new();
        let mut total = OperatorMatrix::zeros(self.dim, self.dim);
        for term in expansion.terms() {
            let mut pair_value = C64::new(1.0, 0.0);
            for pairing in &term.pairings {
                let v = *pair_cache.entry(*pairing).or_insert_with(|| {
                    let spec = self.roster.get(pairing.field);
                    let pair = KernelPairSpec::from(pairing);
                    let mut acc = C64::new(0.0, 0.0);
                    for p in &self.grid.points {
                        let e = spec.energy(p, eps);
                        let a = fts[pairing.left_slot].eval(&[-e, -p.x, -p.y, -p.z]);
                        let b = fts[pairing.right_slot].eval(&[e, p.x, p.y, p.z]);
                        acc += crate::quad::pairing_mode_factor(spec, &pair, p) * a * b * tp2 * tp2 * self.grid.dv;
                    }
                    acc
                });
                pair_value *= v;
            }
            let mut m = OperatorMatrix::identity(self.dim, self.dim);
            for f in term.creations.iter().chain(&term.annihilations) {
                let fm = part_cache
                    .entry(*f)
                    .or_insert_with(|| self.part_matrix(f, &fts[f.slot], eps));
                m = &m * &*fm;
            }
            total += m * (term.coeff * pair_value);
        }
        Ok(total)
    }

    /// Matrix of a single normal-ordered monomial (no cross-contractions):
    /// sum over part splits of ordered products of part matrices.
    pub fn monomial_matrix(
        &self,
        monomial: &NormalMonomial,
        testfns: &[SchwartzTestFn],
        eps: f64,
    ) -> Result<OperatorMatrix, FockError> {
        let max_slot = monomial.factors.iter().map(|f| f.slot).max();
        self.check_slots(testfns, max_slot)?;
        let mut total = OperatorMatrix::zeros(self.dim, self.dim);
        for term in crate::wick::refine(monomial, &self.roster) {
            let mut m = OperatorMatrix::identity(self.dim, self.dim);
            for f in term.creations.iter().chain(&term.annihilations) {
                let fm = self.part_matrix(f, &testfns[f.slot].fourier(), eps);
                m = &m * &fm;
            }
            total += m * term.coeff;
        }
        Ok(total)
    }

    /// Product of whole-monomial matrices, one per block — the independent
    /// reference for [`Self::evaluate_expression`] on a Wick product.
    pub fn block_product_matrix(
        &self,
        blocks: &[crate::wick::NormalPolynomial],
        testfns: &[SchwartzTestFn],
        eps: f64,
    ) -> Result<OperatorMatrix, FockError> {
        let mut total = OperatorMatrix::identity(self.dim, self.dim);
        for block in blocks {
            let mut bm = OperatorMatrix::zeros(self.dim, self.dim);
            for mono in &block.monomials {
                bm += self.monomial_matrix(mono, testfns, eps)?;
            }
            total = &total * &bm;
        }
        Ok(total)
    }

    /// Evaluate a full Wick product (refined view).
    pub fn evaluate_product(
        &self,
        product: &WickProduct,
        testfns: &[SchwartzTestFn],
        eps: f64,
    ) -> Result<OperatorMatrix, FockError> {
        self.evaluate_expression(&product.refined, testfns, eps)
    }

    /// Diagonal of the grid translation by the 4-vector `b`: the state phase
    /// `exp(−i Σ_m occ_m (E_m b⁰ − 𝐩_m·𝐛))`. Conjugation by this diagonal
    /// realizes test-function translation exactly.
    pub fn translation_diag(&self, b: &[f64; 4], eps: f64) -> Vec<C64> {
        let thetas: Vec<f64> = self
            .modes
            .iter()
            .map(|mode| {
                let p = self.grid.points[mode.point];
                let e = self.roster.get(mode.field).energy(&p, eps);
                e * b[0] - (p.x * b[1] + p.y * b[2] + p.z * b[3])
            })
            .collect();
        (0..self.dim)
            .map(|s| {
                let phase: f64 = thetas
                    .iter()
                    .enumerate()
                    .map(|(m, th)| self.occupation(s, m) as f64 * th)
                    .sum();
                C64::new(0.0, -phase).exp()
            })
            .collect()
    }

    /// `U⁻¹ M U` for the diagonal translation `U`.
    pub fn conjugate_by_diag(&self, m: &OperatorMatrix, diag: &[C64]) -> OperatorMatrix {
        let mut out = m.clone();
        for r in 0..self.dim {
            for c in 0..self.dim {
                out[(r, c)] = m[(r, c)] / diag[r] * diag[c];
            }
        }
        out
    }

    /// Largest deviation from the grid CCR/CAR over all mode pairs:
    /// `[a_i, a_j†]_∓ = δ_{ij}/ΔV`, `[a_i, a_j]_∓ = 0` (anticommutator for
    /// Fermi–Fermi pairs, commutator otherwise). Matrix elements touching a
    /// Bose occupation at the cutoff are excluded: the truncated ladder of a
    /// single mode satisfies the relation exactly strictly below `nmax`.
    pub fn ccr_car_defect(&self) -> f64 {
        let n = self.modes.len();
        let mut worst = 0.0f64;
        let anns: Vec<OperatorMatrix> = (0..n).map(|m| self.annihilation(m)).collect();
        for i in 0..n {
            for j in 0..n {
                let both_fermi = self.fermi[i] && self.fermi[j];
                let cre_j = anns[j].adjoint();
                let bracket = if both_fermi {
                    &anns[i] * &cre_j + &cre_j * &anns[i]
                } else {
                    &anns[i] * &cre_j - &cre_j * &anns[i]
                };
                let mut expect = OperatorMatrix::zeros(self.dim, self.dim);
                if i == j {
                    expect = OperatorMatrix::identity(self.dim, self.dim) * C64::new(1.0 / self.grid.dv, 0.0);
                }
                let diff = bracket - expect;
                let top = self.dims[i] - 1;
                let masked = i == j && !self.fermi[i];
                let mut frob = 0.0f64;
                for r in 0..self.dim {
                    for c in 0..self.dim {
                        if masked && (self.occupation(r, i) == top || self.occupation(c, i) == top) {
                            continue;
                        }
                        frob += diff[(r, c)].norm_sqr();
                    }
                }
                worst = worst.max(frob.sqrt());
                let bracket2 = if both_fermi {
                    &anns[i] * &anns[j] + &anns[j] * &anns[i]
                } else {
                    &anns[i] * &anns[j] - &anns[j] * &anns[i]
                };
                worst = worst.max(bracket2.norm());
            }
        }
        worst
    }

    /// Columns (basis states) whose Bose occupations leave `budget` raising
    /// operators of headroom below the cutoff. Acting on these columns, no
    /// operator word of at most `budget` creation parts can touch the
    /// cutoff, so normal-ordered rewriting with scalar pairing values agrees
    /// exactly with the plain matrix product. Fermi modes need no headroom:
    /// the grid CAR is exact on the whole space.
    pub fn safe_columns(&self, budget: usize) -> Vec<usize> {
        (0..self.dim)
            .filter(|&s| {
                (0..self.modes.len()).all(|m| {
                    self.fermi[m] || self.occupation(s, m) + budget < self.dims[m]
                })
            })
            .collect()
    }
}

/// Relative Frobenius difference of two operators restricted to the given
/// columns. A reference block that never rises above roundoff scale (e.g. an
/// exactly cancelling Fermi word) makes a relative measure meaningless; the
/// comparison then falls back to the absolute difference.
pub fn column_rel_diff(a: &OperatorMatrix, b: &OperatorMatrix, cols: &[usize]) -> f64 {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    let mut lhs = 0.0f64;
    for &c in cols {
        for r in 0..a.nrows() {
            num += (a[(r, c)] - b[(r, c)]).norm_sqr();
            den += b[(r, c)].norm_sqr();
            lhs += a[(r, c)].norm_sqr();
        }
    }
    let entries = (cols.len() * a.nrows()).max(1) as f64;
    let floor = entries.sqrt() * f64::EPSILON * lhs.sqrt().max(1.0);
    if den.sqrt() > floor {
        num.sqrt() / den.sqrt()
    } else {
        num.sqrt()
    }
}

/// Diagonal Krein metric; `trivial` when no gauge field is present and η is
/// the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct KreinMetric {
    pub diag: Vec<f64>,
    pub trivial: bool,
}

impl KreinMetric {
    pub fn as_matrix(&self) -> OperatorMatrix {
        let n = self.diag.len();
        let mut m = OperatorMatrix::zeros(n, n);
        for (i, &d) in self.diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// η M η (η is an involution).
    pub fn conjugate(&self, m: &OperatorMatrix) -> OperatorMatrix {
        let mut out = m.clone();
        for r in 0..self.diag.len() {
            for c in 0..self.diag.len() {
                out[(r, c)] = m[(r, c)] * self.diag[r] * self.diag[c];
            }
        }
        out
    }

    /// The Krein adjoint η M† η.
    pub fn adjoint(&self, m: &OperatorMatrix) -> OperatorMatrix {
        self.conjugate(&m.adjoint())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldSpec;
    use crate::wick::{multi_product, FieldFactor, NormalPolynomial};

    fn tiny_scalar_space() -> FockSpace {
        let mut roster = FieldRoster::new();
        roster.register(FieldSpec::scalar("A", 1.0)).unwrap();
        let grid = ModeGrid::from_points(
            vec![Vector3::new(0.3, 0.0, 0.0), Vector3::new(-0.4, 0.2, 0.0)],
            0.125,
            2,
        );
        FockSpace::new(roster, grid).unwrap()
    }

    fn mixed_space() -> FockSpace {
        let mut roster = FieldRoster::new();
        roster.register(FieldSpec::scalar("A", 1.0)).unwrap();
        roster
            .register(FieldSpec::scalar_with_statistics("f", 1.0, Statistics::Fermi))
            .unwrap();
        let grid = ModeGrid::from_points(
            vec![Vector3::new(0.3, 0.0, 0.0), Vector3::new(-0.4, 0.2, 0.0)],
            0.125,
            2,
        );
        FockSpace::new(roster, grid).unwrap()
    }

    #[test]
    fn dimensions_and_guard() {
        let s = tiny_scalar_space();
        assert_eq!(s.dim, 9); // two Bose modes, occupations 0..=2
        let m = mixed_space();
        assert_eq!(m.dim, 36); // 9 × 2²
        // guard
        let mut roster = FieldRoster::new();
        roster.register(FieldSpec::scalar("A", 1.0)).unwrap();
        let grid = ModeGrid::cubic_centered(3, 0.5, 8); // 27 modes × dim 9 each
        assert!(matches!(
            FockSpace::new(roster, grid),
            Err(FockError::DimensionCap { .. })
        ));
    }

    #[test]
    fn ccr_car_exact() {
        // Exactness space: occupations capped at 1 and a cell volume whose
        // ladder scale 1/√ΔV is a power of two, so every bracket entry is
        // reproduced bit for bit.
        let mut roster = FieldRoster::new();
        roster.register(FieldSpec::scalar("A", 1.0)).unwrap();
        roster
            .register(FieldSpec::scalar_with_statistics("f", 1.0, Statistics::Fermi))
            .unwrap();
        let grid = ModeGrid::from_points(
            vec![Vector3::new(0.3, 0.0, 0.0), Vector3::new(-0.4, 0.2, 0.0)],
            0.25,
            1,
        );
        let s = FockSpace::new(roster, grid).unwrap();
        assert_eq!(s.ccr_car_defect(), 0.0);
        // With √2 ladder weights the algebra holds to machine rounding.
        assert!(mixed_space().ccr_car_defect() < 1e-12);
    }

    #[test]
    fn creation_is_adjoint() {
        let s = mixed_space();
        for m in 0..s.modes.len() {
            assert_eq!(s.creation(m), s.annihilation(m).adjoint());
        }
    }

    #[test]
    fn krein_metric_photon_signs() {
        let mut roster = FieldRoster::new();
        roster.register(FieldSpec::photon()).unwrap();
        let grid = ModeGrid::from_points(vec![Vector3::new(0.0, 0.0, 0.5)], 1.0, 1);
        let s = FockSpace::new(roster, grid).unwrap();
        let eta = s.krein_metric();
        assert!(!eta.trivial);
        // one temporal quantum flips the sign; spatial quanta do not
        let temporal = s.mode_index(FieldId(0), 0, 0).unwrap();
        let spatial = s.mode_index(FieldId(0), 2, 0).unwrap();
        for state in 0..s.dim {
            let want = if s.occupation(state, temporal) % 2 == 1 { -1.0 } else { 1.0 };
            assert_eq!(eta.diag[state], want);
            let _ = spatial;
        }
        // involution
        let id = OperatorMatrix::identity(s.dim, s.dim);
        assert_eq!(eta.as_matrix() * eta.as_matrix(), id);
    }

    #[test]
    fn krein_metric_trivial_without_photon() {
        let s = tiny_scalar_space();
        let eta = s.krein_metric();
        assert!(eta.trivial);
        assert!(eta.diag.iter().all(|&d| d == 1.0));
    }

    #[test]
    fn real_scalar_field_is_hermitian() {
        let s = tiny_scalar_space();
        let phi = SchwartzTestFn::gaussian(&[0.0; 4], &[1.0; 4]).unwrap();
        let a = s
            .assemble_field(s.roster.by_name("A").unwrap(), false, 0, &phi, 0.0)
            .unwrap();
        assert!((a.clone() - a.adjoint()).norm() < 1e-12);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn photon_commutator_proportional_to_metric() {
        let mut roster = FieldRoster::new();
        let ph = roster.register(FieldSpec::photon()).unwrap();
        let grid = ModeGrid::from_points(vec![Vector3::new(0.2, -0.1, 0.4)], 0.3, 3);
        let s = FockSpace::new(roster, grid).unwrap();
        let phi = SchwartzTestFn::gaussian(&[0.0; 4], &[1.0; 4]).unwrap();
        let chi = SchwartzTestFn::gaussian(&[0.3, 0.1, 0.0, 0.0], &[0.9; 4]).unwrap();
        // the free-field commutator is a scalar below the occupation cutoff
        let cols = s.safe_columns(2);
        assert!(cols.len() > 1, "safe cone should be nontrivial");
        let mut lambda = [[C64::new(0.0, 0.0); 4]; 4];
        for mu in 0..4 {
            let amu = s.assemble_field(ph, false, mu, &phi, 0.0).unwrap();
            for nu in 0..4 {
                let anu = s.assemble_field(ph, false, nu, &chi, 0.0).unwrap();
                let comm = &amu * &anu - &anu * &amu;
                let c = comm[(0, 0)];
                for &col in &cols {
                    for r in 0..s.dim {
                        let want = if r == col { c } else { C64::new(0.0, 0.0) };
                        assert!(
                            (comm[(r, col)] - want).norm() < 1e-10,
                            "commutator not scalar at ({mu},{nu})"
                        );
                    }
                }
                lambda[mu][nu] = c;
            }
        }
        // diagonal pattern g_{μν} = diag(−1,1,1,1), off-diagonals vanish
        let base = lambda[1][1];
        assert!(base.norm() > 1e-12, "spatial commutator should not vanish");
        for mu in 0..4 {
            for nu in 0..4 {
                let want = if mu == nu {
                    base * crate::fields::PHOTON_METRIC_DIAG[mu]
                } else {
                    C64::new(0.0, 0.0)
                };
                assert!(
                    (lambda[mu][nu] - want).norm() < 1e-10 * (1.0 + base.norm()),
                    "λ[{mu}][{nu}] = {:?}, want {:?}",
                    lambda[mu][nu],
                    want
                );
            }
        }
    }

    #[test]
    fn expansion_matches_block_product() {
        // the mini-oracle: symbolic expansion == plain matrix product on the
        // columns with enough Bose headroom (4 factors of raising budget)
        let mut roster = FieldRoster::new();
        let a = roster.register(FieldSpec::scalar("A", 1.0)).unwrap();
        let f = roster
            .register(FieldSpec::scalar_with_statistics("f", 1.0, Statistics::Fermi))
            .unwrap();
        let grid = ModeGrid::from_points(
            vec![Vector3::new(0.3, 0.0, 0.0), Vector3::new(-0.4, 0.2, 0.0)],
            0.125,
            5,
        );
        let s = FockSpace::new(roster, grid).unwrap();
        let blocks = vec![
            NormalPolynomial::from_monomial(crate::wick::NormalMonomial::new(
                C64::new(1.0, 0.0),
                vec![FieldFactor::full(a, false, 0, 0), FieldFactor::full(f, false, 0, 0)],
            )),
            NormalPolynomial::from_monomial(crate::wick::NormalMonomial::new(
                C64::new(0.7, -0.2),
                vec![FieldFactor::full(f, false, 0, 1), FieldFactor::full(a, false, 0, 1)],
            )),
        ];
        let product = multi_product(&blocks, &s.roster).unwrap();
        let phi = SchwartzTestFn::gaussian(&[0.0; 4], &[1.0; 4]).unwrap();
        let chi = SchwartzTestFn::gaussian(&[0.5, 0.2, 0.0, -0.1], &[0.8; 4]).unwrap();
        let tfs = [phi, chi];
        let lhs = s.evaluate_product(&product, &tfs, 0.0).unwrap();
        let rhs = s.block_product_matrix(&blocks, &tfs, 0.0).unwrap();
        let cols = s.safe_columns(4);
        assert!(cols.len() >= 16, "safe cone should be nontrivial");
        let rel = column_rel_diff(&lhs, &rhs, &cols);
        assert!(rel < 1e-12, "relative deviation {rel}");
    }

    #[test]
    fn pairing_value_matches_vacuum_expectation() {
        let s = tiny_scalar_space();
        let a = s.roster.by_name("A").unwrap();
        let phi = SchwartzTestFn::gaussian(&[0.0; 4], &[1.0; 4]).unwrap();
        let chi = SchwartzTestFn::gaussian(&[0.2, 0.0, 0.3, 0.0], &[1.1; 4]).unwrap();
        // ⟨vac| A(φ) A(χ) |vac⟩ equals the single pairing value
        let m_phi = s.assemble_field(a, false, 0, &phi, 0.0).unwrap();
        let m_chi = s.assemble_field(a, false, 0, &chi, 0.0).unwrap();
        let vac = s.vacuum();
        let got = (&m_phi * &m_chi)[(vac, vac)];
        let pairing = PairingDescriptor {
            field: a,
            left_dagger: false,
            right_dagger: false,
            left_component: 0,
            right_component: 0,
            left_slot: 0,
            right_slot: 1,
        };
        let want = s.grid_pairing_value(&pairing, &phi, &chi, 0.0);
        assert!((got - want).norm() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn translation_conjugation_moves_test_functions() {
        let s = tiny_scalar_space();
        let a = s.roster.by_name("A").unwrap();
        let phi = SchwartzTestFn::gaussian(&[0.1, 0.0, 0.2, 0.0], &[1.0; 4])
            .unwrap()
            .with_modulation(&[0.3, 0.0, 0.0, 0.1])
            .unwrap();
        let b = [0.7, -0.4, 0.2, 0.9];
        let shifted = phi.translate(&b);
        let lhs = s.assemble_field(a, false, 0, &shifted, 0.0).unwrap();
        let u = s.translation_diag(&b, 0.0);
        let rhs = s.conjugate_by_diag(&s.assemble_field(a, false, 0, &phi, 0.0).unwrap(), &u);
        assert!((lhs - rhs).norm() < 1e-10);
    }
}
