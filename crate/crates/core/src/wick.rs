//! Symbolic products of normal-ordered field monomials.
//!
//! A product of normal-ordered blocks expands into a finite sum of
//! normal-ordered terms: annihilation parts of earlier blocks are commuted
//! through creation parts of later blocks one adjacent exchange at a time,
//! so every Fermi transposition is counted where it happens and every
//! contraction enters with coefficient +1 before signs. Two views of the
//! result are kept:
//!
//! - the *refined* expansion ([`FockExpansion`]): every factor split into a
//!   definite creation or annihilation part, terms grouped by the sector
//!   `(ℓ, m)` = (#creation, #annihilation) factors;
//! - the *structural* expansion ([`StructuralTerm`]): residual factors kept
//!   whole, one term per contraction pattern.
//!
//! Pairings whose label supports are disjoint (ψψ, ψ⁺ψ⁺) never appear.

use crate::fields::{FieldId, FieldRoster, Statistics};
use num_complex::Complex;
use std::collections::BTreeMap;
use thiserror::Error;

pub type C64 = Complex<f64>;

#[derive(Debug, Error)]
pub enum WickError {
    #[error("monomial factor {index}: {source}")]
    BadFactor {
        index: usize,
        #[source]
        source: crate::fields::FieldError,
    },
    #[error("malformed monomial: explicit creation part at position {cre} right of explicit annihilation part at position {ann}")]
    NotNormalOrdered { ann: usize, cre: usize },
    #[error("empty block list")]
    NoBlocks,
}

/// Which frequency part of a field factor is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Part {
    /// The full field: creation + annihilation part.
    Full,
    Creation,
    Annihilation,
}

/// One field operator inside a normal-ordered monomial. `slot` indexes the
/// spacetime smearing argument (x₀, x₁, …); factors sharing a slot are taken
/// at the same point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct FieldFactor {
    pub field: FieldId,
    pub dagger: bool,
    pub component: usize,
    pub slot: usize,
    pub part: Part,
}

impl FieldFactor {
    pub fn full(field: FieldId, dagger: bool, component: usize, slot: usize) -> Self {
        FieldFactor {
            field,
            dagger,
            component,
            slot,
            part: Part::Full,
        }
    }

    /// Canonical order inside a creation or annihilation block:
    /// daggered fields first, then by (field, component, slot).
    fn sort_key(&self) -> (usize, u8, usize, usize) {
        (self.field.0, !self.dagger as u8, self.component, self.slot)
    }
}

/// A normal-ordered monomial `coeff · :F₁ F₂ … F_r:`. The factor list order
/// is the operator order between the colons.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMonomial {
    pub coeff: C64,
    pub factors: Vec<FieldFactor>,
}

impl NormalMonomial {
    pub fn new(coeff: C64, factors: Vec<FieldFactor>) -> Self {
        NormalMonomial { coeff, factors }
    }

    pub fn one() -> Self {
        NormalMonomial {
            coeff: C64::new(1.0, 0.0),
            factors: Vec::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    /// Checks labels/components against the roster and that explicitly split
    /// parts respect normal order (no explicit creation part to the right of
    /// an explicit annihilation part).
    pub fn validate(&self, roster: &FieldRoster) -> Result<(), WickError> {
        for (i, f) in self.factors.iter().enumerate() {
            let spec = roster.get(f.field);
            spec.check_component(f.component)
                .map_err(|source| WickError::BadFactor { index: i, source })?;
        }
        let mut last_ann: Option<usize> = None;
        for (i, f) in self.factors.iter().enumerate() {
            match f.part {
                Part::Annihilation => last_ann = Some(i),
                Part::Creation => {
                    if let Some(a) = last_ann {
                        return Err(WickError::NotNormalOrdered { ann: a, cre: i });
                    }
                }
                Part::Full => {}
            }
        }
        Ok(())
    }
}

/// Sum of normal-ordered monomials; the unit of multiplication in
/// [`multi_product`]. Contractions never form inside one block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalPolynomial {
    pub monomials: Vec<NormalMonomial>,
}

impl NormalPolynomial {
    pub fn from_monomial(m: NormalMonomial) -> Self {
        NormalPolynomial { monomials: vec![m] }
    }

    pub fn validate(&self, roster: &FieldRoster) -> Result<(), WickError> {
        self.monomials.iter().try_for_each(|m| m.validate(roster))
    }

    pub fn total_degree(&self) -> usize {
        self.monomials.iter().map(|m| m.degree()).max().unwrap_or(0)
    }
}

/// A contracted pair: the annihilation part of the left factor against the
/// creation part of the right factor. Slots refer to smearing arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct PairingDescriptor {
    pub field: FieldId,
    pub left_dagger: bool,
    pub right_dagger: bool,
    pub left_component: usize,
    pub right_component: usize,
    pub left_slot: usize,
    pub right_slot: usize,
}

/// One normal-ordered term with every factor split into a definite part.
/// Operator order is `creations … annihilations` as listed.
#[derive(Debug, Clone)]
pub struct RefinedTerm {
    pub coeff: C64,
    /// Parity (0 or 1) of the Fermi transpositions performed along the
    /// construction route; the sign is already folded into `coeff`. Route
    /// metadata only — excluded from equality, since e.g. a sign folded
    /// while extracting a contraction leaves no reordering behind.
    pub transpositions: u32,
    pub creations: Vec<FieldFactor>,
    pub annihilations: Vec<FieldFactor>,
    pub pairings: Vec<PairingDescriptor>,
}

impl PartialEq for RefinedTerm {
    fn eq(&self, other: &Self) -> bool {
        self.coeff == other.coeff
            && self.creations == other.creations
            && self.annihilations == other.annihilations
            && self.pairings == other.pairings
    }
}

impl RefinedTerm {
    pub fn sector(&self) -> (usize, usize) {
        (self.creations.len(), self.annihilations.len())
    }

    /// Sorts blocks into canonical factor order and pairings into canonical
    /// order, folding Fermi reordering signs into the coefficient.
    fn canonicalize(&mut self, roster: &FieldRoster) {
        let mut swaps = 0u32;
        swaps += sort_fermi_swaps(&mut self.creations, roster);
        swaps += sort_fermi_swaps(&mut self.annihilations, roster);
        if swaps % 2 == 1 {
            self.coeff = -self.coeff;
        }
        // Normalize the route-dependent count to its parity so structurally
        // equal terms compare equal regardless of how they were produced.
        self.transpositions = (self.transpositions + swaps) % 2;
        self.pairings.sort();
    }

    /// Key identifying structurally equal terms (same parts, same pairings).
    fn merge_key(&self) -> (Vec<FieldFactor>, Vec<FieldFactor>, Vec<PairingDescriptor>) {
        (
            self.creations.clone(),
            self.annihilations.clone(),
            self.pairings.clone(),
        )
    }
}

/// Stable-sorts factors by canonical key, returning the number of Fermi–Fermi
/// inversions the sort removes.
fn sort_fermi_swaps(factors: &mut [FieldFactor], roster: &FieldRoster) -> u32 {
    // Count Fermi inversions of the stable sort with an O(n²) sweep; factor
    // lists are short.
    let n = factors.len();
    let mut swaps = 0u32;
    for i in 0..n {
        for j in (i + 1)..n {
            if factors[j].sort_key() < factors[i].sort_key()
                && roster.get(factors[i].field).statistics == Statistics::Fermi
                && roster.get(factors[j].field).statistics == Statistics::Fermi
            {
                swaps += 1;
            }
        }
    }
    factors.sort_by_key(|f| f.sort_key());
    swaps
}

/// The refined expansion: terms grouped by sector `(ℓ, m)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FockExpansion {
    /// Total number of field factors across all input blocks; every sector
    /// satisfies `ℓ + m ≤ total_factors`.
    pub total_factors: usize,
    pub sectors: BTreeMap<(usize, usize), Vec<RefinedTerm>>,
}

impl FockExpansion {
    fn from_terms(terms: Vec<RefinedTerm>, total_factors: usize, roster: &FieldRoster) -> Self {
        // Canonicalize, then merge identical terms per sector.
        let mut buckets: BTreeMap<(usize, usize), BTreeMap<_, RefinedTerm>> = BTreeMap::new();
        for mut t in terms {
            t.canonicalize(roster);
            let sector = t.sector();
            let entry = buckets.entry(sector).or_default();
            match entry.get_mut(&t.merge_key()) {
                Some(existing) => existing.coeff += t.coeff,
                None => {
                    entry.insert(t.merge_key(), t);
                }
            }
        }
        let mut sectors = BTreeMap::new();
        for (sector, map) in buckets {
            let kept: Vec<RefinedTerm> = map
                .into_values()
                .filter(|t| t.coeff != C64::new(0.0, 0.0))
                .collect();
            if !kept.is_empty() {
                sectors.insert(sector, kept);
            }
        }
        FockExpansion {
            total_factors,
            sectors,
        }
    }

    pub fn num_terms(&self) -> usize {
        self.sectors.values().map(Vec::len).sum()
    }

    pub fn terms(&self) -> impl Iterator<Item = &RefinedTerm> {
        self.sectors.values().flatten()
    }

    /// Structural invariants: sector bound and fully-contracted (0,0) terms.
    pub fn check_invariants(&self) -> bool {
        self.sectors.iter().all(|(&(l, m), terms)| {
            l + m <= self.total_factors
                && terms.iter().all(|t| {
                    t.sector() == (l, m) && (!(l == 0 && m == 0) || (t.creations.is_empty() && t.annihilations.is_empty()))
                })
        })
    }
}

/// One contraction pattern with residual factors kept whole (part `Full`),
/// in canonical order; the coefficient carries the Fermi sign.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralTerm {
    pub coeff: C64,
    pub factors: Vec<FieldFactor>,
    pub pairings: Vec<PairingDescriptor>,
}

/// Result of a product of normal-ordered blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct WickProduct {
    pub refined: FockExpansion,
    pub structural: Vec<StructuralTerm>,
}

// ---------------------------------------------------------------------------
// refine: split full factors into definite parts
// ---------------------------------------------------------------------------

/// Expands one normal monomial into part-definite terms: each `Full` factor
/// branches into its creation and annihilation part, then creation parts are
/// moved left of annihilation parts with the Fermi parity of the interleave.
pub fn refine(monomial: &NormalMonomial, roster: &FieldRoster) -> Vec<RefinedTerm> {
    let n = monomial.factors.len();
    let mut out = Vec::new();
    // parts[i] = chosen part for factor i
    let mut parts = vec![Part::Creation; n];
    fn rec(
        i: usize,
        monomial: &NormalMonomial,
        roster: &FieldRoster,
        parts: &mut Vec<Part>,
        out: &mut Vec<RefinedTerm>,
    ) {
        if i == monomial.factors.len() {
            let mut swaps = 0u32;
            for a in 0..parts.len() {
                for c in (a + 1)..parts.len() {
                    if parts[a] == Part::Annihilation
                        && parts[c] == Part::Creation
                        && roster.get(monomial.factors[a].field).statistics == Statistics::Fermi
                        && roster.get(monomial.factors[c].field).statistics == Statistics::Fermi
                    {
                        swaps += 1;
                    }
                }
            }
            let sign = if swaps.is_multiple_of(2) { 1.0 } else { -1.0 };
            let pick = |part: Part| -> Vec<FieldFactor> {
                monomial
                    .factors
                    .iter()
                    .zip(parts.iter())
                    .filter(|(_, &p)| p == part)
                    .map(|(f, &p)| FieldFactor { part: p, ..*f })
                    .collect()
            };
            out.push(RefinedTerm {
                coeff: monomial.coeff * sign,
                transpositions: swaps,
                creations: pick(Part::Creation),
                annihilations: pick(Part::Annihilation),
                pairings: Vec::new(),
            });
            return;
        }
        match monomial.factors[i].part {
            Part::Full => {
                for p in [Part::Creation, Part::Annihilation] {
                    parts[i] = p;
                    rec(i + 1, monomial, roster, parts, out);
                }
            }
            p => {
                parts[i] = p;
                rec(i + 1, monomial, roster, parts, out);
            }
        }
    }
    rec(0, monomial, roster, &mut parts, &mut out);
    out
}

// ---------------------------------------------------------------------------
// the merge sweep
// ---------------------------------------------------------------------------

/// True when the annihilation part of `left` can contract the creation part
/// of `right`: same field and overlapping label supports.
fn admissible(left: &FieldFactor, right: &FieldFactor, roster: &FieldRoster) -> bool {
    if left.field != right.field {
        return false;
    }
    let spec = roster.get(left.field);
    spec.annihilation_labels(left.dagger)
        .iter()
        .any(|l| spec.creation_labels(right.dagger).contains(l))
}

impl PairingDescriptor {
    fn from_factors(left: &FieldFactor, right: &FieldFactor) -> Self {
        PairingDescriptor {
            field: left.field,
            left_dagger: left.dagger,
            right_dagger: right.dagger,
            left_component: left.component,
            right_component: right.component,
            left_slot: left.slot,
            right_slot: right.slot,
        }
    }
}

/// One branch of a sweep: (transpositions, contracted pairs, surviving-left
/// mask, surviving-right mask).
type SweepOutcome = (u32, Vec<PairingDescriptor>, Vec<bool>, Vec<bool>);

/// Commutes the annihilation block `la` through the creation block `rc`,
/// rightmost annihilation first, branching at every admissible contraction.
/// Each adjacent exchange of two Fermi factors contributes one transposition.
fn sweep(la: &[FieldFactor], rc: &[FieldFactor], roster: &FieldRoster) -> Vec<SweepOutcome> {
    let mut outcomes = Vec::new();
    let mut rc_present = vec![true; rc.len()];
    let mut la_present = vec![true; la.len()];
    let mut pairs = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: isize,
        la: &[FieldFactor],
        rc: &[FieldFactor],
        roster: &FieldRoster,
        swaps: u32,
        rc_present: &mut Vec<bool>,
        la_present: &mut Vec<bool>,
        pairs: &mut Vec<PairingDescriptor>,
        outcomes: &mut Vec<SweepOutcome>,
    ) {
        if i < 0 {
            outcomes.push((swaps, pairs.clone(), la_present.clone(), rc_present.clone()));
            return;
        }
        let x = &la[i as usize];
        let x_fermi = roster.get(x.field).statistics == Statistics::Fermi;
        // Pass all present creation factors without contracting.
        let full_swaps = if x_fermi {
            (0..rc.len())
                .filter(|&j| rc_present[j] && roster.get(rc[j].field).statistics == Statistics::Fermi)
                .count() as u32
        } else {
            0
        };
        rec(i - 1, la, rc, roster, swaps + full_swaps, rc_present, la_present, pairs, outcomes);
        // Contract with each admissible present creation factor.
        for j in 0..rc.len() {
            if !rc_present[j] || !admissible(x, &rc[j], roster) {
                continue;
            }
            let swaps_to_j = if x_fermi {
                (0..j)
                    .filter(|&k| rc_present[k] && roster.get(rc[k].field).statistics == Statistics::Fermi)
                    .count() as u32
            } else {
                0
            };
            rc_present[j] = false;
            la_present[i as usize] = false;
            pairs.push(PairingDescriptor::from_factors(x, &rc[j]));
            rec(i - 1, la, rc, roster, swaps + swaps_to_j, rc_present, la_present, pairs, outcomes);
            pairs.pop();
            la_present[i as usize] = true;
            rc_present[j] = true;
        }
    }
    rec(
        la.len() as isize - 1,
        la,
        rc,
        roster,
        0,
        &mut rc_present,
        &mut la_present,
        &mut pairs,
        &mut outcomes,
    );
    outcomes
}

/// Multiplies two refined terms, producing all normal-ordered terms of the
/// product.
fn merge(left: &RefinedTerm, right: &RefinedTerm, roster: &FieldRoster) -> Vec<RefinedTerm> {
    sweep(&left.annihilations, &right.creations, roster)
        .into_iter()
        .map(|(swaps, new_pairs, la_mask, rc_mask)| {
            let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
            let mut creations = left.creations.clone();
            creations.extend(
                right
                    .creations
                    .iter()
                    .zip(&rc_mask)
                    .filter(|(_, &keep)| keep)
                    .map(|(f, _)| *f),
            );
            let mut annihilations: Vec<FieldFactor> = left
                .annihilations
                .iter()
                .zip(&la_mask)
                .filter(|(_, &keep)| keep)
                .map(|(f, _)| *f)
                .collect();
            annihilations.extend(right.annihilations.iter().copied());
            let mut pairings = left.pairings.clone();
            pairings.extend(right.pairings.iter().copied());
            pairings.extend(new_pairs);
            RefinedTerm {
                coeff: left.coeff * right.coeff * sign,
                transpositions: left.transpositions + right.transpositions + swaps,
                creations,
                annihilations,
                pairings,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// products
// ---------------------------------------------------------------------------

/// Product of normal-ordered blocks, left to right. Contractions pair the
/// annihilation part of a factor in an earlier block with the creation part
/// of a factor in a later block; never within one block.
pub fn multi_product(blocks: &[NormalPolynomial], roster: &FieldRoster) -> Result<WickProduct, WickError> {
    if blocks.is_empty() {
        return Err(WickError::NoBlocks);
    }
    for b in blocks {
        b.validate(roster)?;
    }
    let total_factors: usize = blocks
        .iter()
        .map(|b| b.monomials.iter().map(|m| m.degree()).max().unwrap_or(0))
        .sum();

    // Refined expansion: left fold of merge over part-split blocks.
    let mut acc: Vec<RefinedTerm> = blocks[0]
        .monomials
        .iter()
        .flat_map(|m| refine(m, roster))
        .collect();
    for block in &blocks[1..] {
        let rhs: Vec<RefinedTerm> = block
            .monomials
            .iter()
            .flat_map(|m| refine(m, roster))
            .collect();
        let mut next = Vec::new();
        for l in &acc {
            for r in &rhs {
                next.extend(merge(l, r, roster));
            }
        }
        acc = next;
    }
    let refined = FockExpansion::from_terms(acc, total_factors, roster);
    let structural = structural_product(blocks, roster);
    Ok(WickProduct { refined, structural })
}

/// Two-block product (the common case).
pub fn normal_product(
    w1: &NormalPolynomial,
    w2: &NormalPolynomial,
    roster: &FieldRoster,
) -> Result<WickProduct, WickError> {
    multi_product(&[w1.clone(), w2.clone()], roster)
}

/// All contraction patterns at whole-factor granularity. Signs are computed
/// by extracting contracted pairs one at a time (rightmost left-partner
/// first) and counting surviving Fermi factors jumped over.
pub fn structural_product(blocks: &[NormalPolynomial], roster: &FieldRoster) -> Vec<StructuralTerm> {
    let mut out = Vec::new();
    // One monomial choice per block.
    let mut choice = vec![0usize; blocks.len()];
    loop {
        let monos: Vec<&NormalMonomial> = blocks
            .iter()
            .zip(&choice)
            .map(|(b, &c)| &b.monomials[c])
            .collect();
        structural_for_choice(&monos, roster, &mut out);
        // Advance the mixed-radix choice counter.
        let mut k = 0;
        loop {
            if k == blocks.len() {
                return dedup_structural(out, roster);
            }
            choice[k] += 1;
            if choice[k] < blocks[k].monomials.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

fn structural_for_choice(monos: &[&NormalMonomial], roster: &FieldRoster, out: &mut Vec<StructuralTerm>) {
    // Flatten factors with block indices; written order.
    let mut flat: Vec<(usize, FieldFactor)> = Vec::new();
    for (bi, m) in monos.iter().enumerate() {
        for f in &m.factors {
            flat.push((bi, *f));
        }
    }
    let coeff: C64 = monos.iter().map(|m| m.coeff).product();
    // Candidate pairs: earlier block annihilates into later block's creation.
    let mut candidates = Vec::new();
    for i in 0..flat.len() {
        for j in 0..flat.len() {
            if flat[i].0 < flat[j].0 && admissible(&flat[i].1, &flat[j].1, roster) {
                candidates.push((i, j));
            }
        }
    }
    // Enumerate matchings over the candidate pairs.
    let mut used = vec![false; flat.len()];
    let mut matching = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        k: usize,
        candidates: &[(usize, usize)],
        used: &mut Vec<bool>,
        matching: &mut Vec<(usize, usize)>,
        flat: &[(usize, FieldFactor)],
        coeff: C64,
        roster: &FieldRoster,
        out: &mut Vec<StructuralTerm>,
    ) {
        if k == candidates.len() {
            out.push(build_structural(flat, matching, coeff, roster));
            return;
        }
        rec(k + 1, candidates, used, matching, flat, coeff, roster, out);
        let (i, j) = candidates[k];
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            matching.push((i, j));
            rec(k + 1, candidates, used, matching, flat, coeff, roster, out);
            matching.pop();
            used[i] = false;
            used[j] = false;
        }
    }
    rec(0, &candidates, &mut used, &mut matching, &flat, coeff, roster, out);
}

fn build_structural(
    flat: &[(usize, FieldFactor)],
    matching: &[(usize, usize)],
    coeff: C64,
    roster: &FieldRoster,
) -> StructuralTerm {
    let mut present = vec![true; flat.len()];
    let mut swaps = 0u32;
    let mut pairs: Vec<(usize, usize)> = matching.to_vec();
    pairs.sort_by_key(|p| std::cmp::Reverse(p.0)); // rightmost left-partner first
    for &(l, r) in &pairs {
        if roster.get(flat[l].1.field).statistics == Statistics::Fermi {
            swaps += ((l + 1)..r)
                .filter(|&k| present[k] && roster.get(flat[k].1.field).statistics == Statistics::Fermi)
                .count() as u32;
        }
        present[l] = false;
        present[r] = false;
    }
    let mut factors: Vec<FieldFactor> = flat
        .iter()
        .zip(&present)
        .filter(|(_, &p)| p)
        .map(|((_, f), _)| *f)
        .collect();
    swaps += sort_fermi_swaps(&mut factors, roster);
    let sign = if swaps.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut pairings: Vec<PairingDescriptor> = matching
        .iter()
        .map(|&(l, r)| PairingDescriptor::from_factors(&flat[l].1, &flat[r].1))
        .collect();
    pairings.sort();
    StructuralTerm {
        coeff: coeff * sign,
        factors,
        pairings,
    }
}

fn dedup_structural(terms: Vec<StructuralTerm>, _roster: &FieldRoster) -> Vec<StructuralTerm> {
    let mut map: BTreeMap<(Vec<FieldFactor>, Vec<PairingDescriptor>), StructuralTerm> = BTreeMap::new();
    for t in terms {
        let key = (t.factors.clone(), t.pairings.clone());
        match map.get_mut(&key) {
            Some(e) => e.coeff += t.coeff,
            None => {
                map.insert(key, t);
            }
        }
    }
    map.into_values().filter(|t| t.coeff != C64::new(0.0, 0.0)).collect()
}

/// Refines every structural term and regroups; must reproduce the refined
/// expansion exactly. Used as an internal consistency oracle.
pub fn refine_structural(terms: &[StructuralTerm], total_factors: usize, roster: &FieldRoster) -> FockExpansion {
    let mut refined = Vec::new();
    for t in terms {
        let mono = NormalMonomial::new(t.coeff, t.factors.clone());
        for mut r in refine(&mono, roster) {
            r.pairings.extend(t.pairings.iter().copied());
            refined.push(r);
        }
    }
    FockExpansion::from_terms(refined, total_factors, roster)
}

// ---------------------------------------------------------------------------
// counting and signs
// ---------------------------------------------------------------------------

/// Number of contraction patterns for a two-block product with `n` variables
/// on the left and `m` total, all pairings admissible:
/// `Σ_q C(n,q)·C(m−n,q)·q!`.
pub fn term_count(n: u64, m: u64) -> u64 {
    assert!(n <= m, "left block larger than total");
    let k = m - n;
    let mut total = 0u64;
    for q in 0..=n.min(k) {
        total += binomial(n, q) * binomial(k, q) * factorial(q);
    }
    total
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

/// Parity sign of a permutation restricted to Fermi elements: −1 to the
/// number of pairs of Fermi items appearing in inverted order. `perm` lists
/// item indices in their new order; `fermi_mask[item]` flags Fermi items.
pub fn fermi_sign(perm: &[usize], fermi_mask: &[bool]) -> i32 {
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in (i + 1)..perm.len() {
            if perm[i] > perm[j] && fermi_mask[perm[i]] && fermi_mask[perm[j]] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

// ---------------------------------------------------------------------------
// model densities
// ---------------------------------------------------------------------------

/// The model self-coupling `:A(x)²:/2` for a scalar field.
pub fn scalar_interaction(field: FieldId, slot: usize) -> NormalPolynomial {
    NormalPolynomial::from_monomial(NormalMonomial::new(
        C64::new(0.5, 0.0),
        vec![
            FieldFactor::full(field, false, 0, slot),
            FieldFactor::full(field, false, 0, slot),
        ],
    ))
}

/// The spinor-vector coupling `:ψ⁺(x) γ⁰γ^μ ψ(x) A_μ(x):` summed over
/// spinor components and the polarization index.
pub fn qed_interaction(psi: FieldId, photon: FieldId, slot: usize) -> NormalPolynomial {
    let gamma = crate::fields::gamma_matrices();
    let mut monomials = Vec::new();
    for mu in 0..4 {
        let big_gamma = gamma[0] * gamma[mu];
        for a in 0..4 {
            for b in 0..4 {
                let coeff = big_gamma[(a, b)];
                if coeff == C64::new(0.0, 0.0) {
                    continue;
                }
                monomials.push(NormalMonomial::new(
                    coeff,
                    vec![
                        FieldFactor::full(psi, true, a, slot),
                        FieldFactor::full(psi, false, b, slot),
                        FieldFactor::full(photon, false, mu, slot),
                    ],
                ));
            }
        }
    }
    NormalPolynomial { monomials }
}

// ---------------------------------------------------------------------------
// rendering
// ---------------------------------------------------------------------------

fn render_coeff(c: C64) -> String {
    if (c.im == 0.0) && (c.re - c.re.round()).abs() < 1e-12 && c.re.abs() < 1e6 {
        format!("{:+}", c.re.round() as i64)
    } else if c.re == 0.0 && (c.im - c.im.round()).abs() < 1e-12 && c.im.abs() < 1e6 {
        format!("{:+}i", c.im.round() as i64)
    } else {
        format!("{:+.6}{:+.6}i", c.re, c.im)
    }
}

fn render_factor(f: &FieldFactor, roster: &FieldRoster) -> String {
    let spec = roster.get(f.field);
    let dag = if f.dagger { "+" } else { "" };
    let part = match f.part {
        Part::Full => "",
        Part::Creation => ":c",
        Part::Annihilation => ":a",
    };
    format!("{}{dag}{part}[{}](x{})", spec.name, f.component, f.slot)
}

fn render_pairing(p: &PairingDescriptor, roster: &FieldRoster) -> String {
    let name = &roster.get(p.field).name;
    let ld = if p.left_dagger { "+" } else { "" };
    let rd = if p.right_dagger { "+" } else { "" };
    format!(
        "<{name}{ld}[{}](x{})~{name}{rd}[{}](x{})>",
        p.left_component, p.left_slot, p.right_component, p.right_slot
    )
}

impl RefinedTerm {
    pub fn render(&self, roster: &FieldRoster) -> String {
        let (l, m) = self.sector();
        let pairs = self
            .pairings
            .iter()
            .map(|p| render_pairing(p, roster))
            .collect::<Vec<_>>()
            .join(" ");
        let kernels: Vec<String> = self
            .creations
            .iter()
            .chain(&self.annihilations)
            .map(|f| render_factor(f, roster))
            .collect();
        let kernels = if kernels.is_empty() {
            "1".to_owned()
        } else {
            kernels.join(" ")
        };
        format!("({l},{m}); {}; {pairs}; {kernels}", render_coeff(self.coeff))
    }
}

impl StructuralTerm {
    pub fn render(&self, roster: &FieldRoster) -> String {
        let pairs = self
            .pairings
            .iter()
            .map(|p| render_pairing(p, roster))
            .collect::<Vec<_>>()
            .join(" ");
        let kernels: Vec<String> = self.factors.iter().map(|f| render_factor(f, roster)).collect();
        let kernels = if kernels.is_empty() {
            "1".to_owned()
        } else {
            kernels.join(" ")
        };
        // Residual factors are whole fields; the sector column records how
        // many could create and how many annihilate.
        let r = self.factors.len();
        format!("({r},{r}); {}; {pairs}; {kernels}", render_coeff(self.coeff))
    }
}

impl WickProduct {
    /// One line per structural term (contraction pattern).
    pub fn render_structural(&self, roster: &FieldRoster) -> Vec<String> {
        self.structural.iter().map(|t| t.render(roster)).collect()
    }

    /// One line per refined term, sector order.
    pub fn render_refined(&self, roster: &FieldRoster) -> Vec<String> {
        self.refined.terms().map(|t| t.render(roster)).collect()
    }

    /// One summary line per sector.
    pub fn render_sectors(&self, _roster: &FieldRoster) -> Vec<String> {
        self.refined
            .sectors
            .iter()
            .map(|(&(l, m), terms)| {
                let norm: f64 = terms.iter().map(|t| t.coeff.norm()).sum();
                format!("({l},{m}); terms={}; |coeff|_1={:.6}", terms.len(), norm)
            })
            .collect()
    }
}
