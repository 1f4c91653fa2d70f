//! Finite-rank exterior algebra with paired generator families (plain and
//! conjugate), the order-reversing conjugation, and sign bookkeeping for
//! block reorderings and antisymmetric pairings.

use crate::C64;
use std::collections::BTreeMap;

/// Generators are bit positions in a word: plain generators occupy bits
/// `0..n`, conjugate generators bits `n..2n`.
const MAX_RANK: usize = 12;

#[derive(Debug, thiserror::Error)]
pub enum GrassmannError {
    #[error("rank {0} exceeds the supported maximum {MAX_RANK}")]
    RankTooLarge(usize),
    #[error("elements belong to algebras of different rank")]
    MixedRank,
    #[error("generator index {index} out of range for rank {rank}")]
    BadGenerator { index: usize, rank: usize },
    #[error("coefficient table is not antisymmetric at {tuple:?} (defect {defect})")]
    NotAntisymmetric { tuple: Vec<usize>, defect: f64 },
}

/// The algebra is fully described by its rank; elements carry it along for
/// compatibility checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrassmannAlgebra {
    pub rank: usize,
}

impl GrassmannAlgebra {
    pub fn new(rank: usize) -> Result<Self, GrassmannError> {
        if rank > MAX_RANK {
            return Err(GrassmannError::RankTooLarge(rank));
        }
        Ok(GrassmannAlgebra { rank })
    }

    pub fn zero(&self) -> GrassmannElement {
        GrassmannElement {
            rank: self.rank,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(&self, c: C64) -> GrassmannElement {
        let mut e = self.zero();
        e.add_term(0, c);
        e
    }

    pub fn generator(&self, i: usize) -> Result<GrassmannElement, GrassmannError> {
        self.check_index(i)?;
        let mut e = self.zero();
        e.add_term(1 << i, C64::new(1.0, 0.0));
        Ok(e)
    }

    pub fn conjugate_generator(&self, i: usize) -> Result<GrassmannElement, GrassmannError> {
        self.check_index(i)?;
        let mut e = self.zero();
        e.add_term(1 << (self.rank + i), C64::new(1.0, 0.0));
        Ok(e)
    }

    fn check_index(&self, i: usize) -> Result<(), GrassmannError> {
        if i >= self.rank {
            return Err(GrassmannError::BadGenerator {
                index: i,
                rank: self.rank,
            });
        }
        Ok(())
    }
}

/// A sparse combination of basis words; each word is a bitmask of generators
/// in canonical ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannElement {
    pub rank: usize,
    pub terms: BTreeMap<u32, C64>,
}

impl GrassmannElement {
    fn add_term(&mut self, word: u32, c: C64) {
        let entry = self.terms.entry(word).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        if *entry == C64::new(0.0, 0.0) {
            self.terms.remove(&word);
        }
    }

    pub fn coeff(&self, word: u32) -> C64 {
        self.terms.get(&word).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Result<Self, GrassmannError> {
        if self.rank != other.rank {
            return Err(GrassmannError::MixedRank);
        }
        let mut out = self.clone();
        for (&w, &c) in &other.terms {
            out.add_term(w, c);
        }
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|v| *v *= c);
        out.terms.retain(|_, v| *v != C64::new(0.0, 0.0));
        out
    }

    /// Highest occupied degree, `None` for the zero element.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(|w| w.count_ones() as usize).max()
    }

    /// Exterior product. Words sharing a generator annihilate; otherwise the
    /// sign is the parity of generator crossings in the concatenation.
    pub fn wedge(&self, other: &Self) -> Result<Self, GrassmannError> {
        if self.rank != other.rank {
            return Err(GrassmannError::MixedRank);
        }
        let mut out = GrassmannElement {
            rank: self.rank,
            terms: BTreeMap::new(),
        };
        for (&wa, &ca) in &self.terms {
            for (&wb, &cb) in &other.terms {
                if wa & wb != 0 {
                    continue;
                }
                let sign = interleave_sign(wa, wb);
                out.add_term(wa | wb, ca * cb * sign);
            }
        }
        Ok(out)
    }

    /// The antilinear, order-reversing conjugation: coefficients are
    /// conjugated, plain and conjugate generators trade places, and each
    /// degree-k word picks up the reversal sign `(−1)^{k(k−1)/2}`.
    pub fn involute(&self) -> Self {
        let low = (1u32 << self.rank) - 1;
        let mut out = GrassmannElement {
            rank: self.rank,
            terms: BTreeMap::new(),
        };
        for (&w, &c) in &self.terms {
            let swapped = ((w & low) << self.rank) | (w >> self.rank);
            let k = w.count_ones();
            let sign = if (k * k.wrapping_sub(1) / 2) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            out.add_term(swapped, c.conj() * sign);
        }
        out
    }
}

/// Parity sign of moving every generator of `b` left past the generators of
/// `a` that exceed it.
fn interleave_sign(a: u32, b: u32) -> f64 {
    let mut crossings = 0u32;
    let mut rest = b;
    while rest != 0 {
        let bit = rest.trailing_zeros();
        // generators of `a` above `bit` must be jumped over
        crossings += (a >> (bit + 1)).count_ones();
        rest &= rest - 1;
    }
    if crossings.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Sign of rotating a block of `p` odd generators past a block of `q`:
/// `(−1)^{pq}`.
pub fn block_swap_sign(p: usize, q: usize) -> i32 {
    if (p * q).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Pairs an antisymmetric coefficient table against the degree-`k` part of an
/// element: `Σ_{i₁<…<i_k} t(i₁,…,i_k) · coeff(g_{i₁}∧…∧g_{i_k})`. The table
/// is validated on every adjacent transposition of every ascending tuple.
pub fn pair_with_distribution(
    elem: &GrassmannElement,
    k: usize,
    table: &dyn Fn(&[usize]) -> C64,
) -> Result<C64, GrassmannError> {
    let total = 2 * elem.rank;
    let tuples = ascending_tuples(total, k);
    for tuple in &tuples {
        let base = table(tuple);
        for swap_at in 0..k.saturating_sub(1) {
            let mut swapped = tuple.clone();
            swapped.swap(swap_at, swap_at + 1);
            let defect = (table(&swapped) + base).norm();
            if defect > 1e-12 * (base.norm() + 1.0) {
                return Err(GrassmannError::NotAntisymmetric {
                    tuple: tuple.clone(),
                    defect,
                });
            }
        }
    }
    let mut acc = C64::new(0.0, 0.0);
    for tuple in &tuples {
        let word = tuple.iter().fold(0u32, |w, &i| w | 1 << i);
        let c = elem.coeff(word);
        if c != C64::new(0.0, 0.0) {
            acc += table(tuple) * c;
        }
    }
    Ok(acc)
}

fn ascending_tuples(total: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, total: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..total {
            cur.push(i);
            rec(i + 1, total, k, cur, out);
            cur.pop();
        }
    }
    rec(0, total, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wick::fermi_sign;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn generators_anticommute() {
        let alg = GrassmannAlgebra::new(4).unwrap();
        let a = alg.generator(0).unwrap();
        let b = alg.generator(2).unwrap();
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        assert_eq!(ab, ba.scale(c(-1.0)));
        assert!(a.wedge(&a).unwrap().is_zero());
    }

    #[test]
    fn wedge_is_associative_and_graded() {
        let alg = GrassmannAlgebra::new(5).unwrap();
        let x = alg
            .generator(0)
            .unwrap()
            .add(&alg.generator(3).unwrap().scale(C64::new(0.5, -1.0)))
            .unwrap()
            .add(&alg.scalar(c(0.7)))
            .unwrap();
        let y = alg
            .generator(1)
            .unwrap()
            .add(&alg.conjugate_generator(2).unwrap().scale(c(2.0)))
            .unwrap();
        let z = alg
            .conjugate_generator(0)
            .unwrap()
            .add(&alg.generator(4).unwrap())
            .unwrap();
        let left = x.wedge(&y).unwrap().wedge(&z).unwrap();
        let right = x.wedge(&y.wedge(&z).unwrap()).unwrap();
        assert_eq!(left, right);

        let p = alg.generator(0).unwrap().wedge(&alg.generator(1).unwrap()).unwrap();
        let q = alg.generator(2).unwrap();
        assert_eq!(p.wedge(&q).unwrap().degree(), Some(3));
    }

    #[test]
    fn involution_reverses_products() {
        let alg = GrassmannAlgebra::new(3).unwrap();
        let a = alg.generator(0).unwrap().scale(C64::new(0.0, 2.0));
        let b = alg.generator(1).unwrap();
        // (a b)* = b* a*
        let lhs = a.wedge(&b).unwrap().involute();
        let rhs = b.involute().wedge(&a.involute()).unwrap();
        assert_eq!(lhs, rhs);
        // The conjugation is an involution.
        let e = a
            .wedge(&b)
            .unwrap()
            .add(&alg.conjugate_generator(2).unwrap())
            .unwrap();
        assert_eq!(e.involute().involute(), e);
        // Antilinearity.
        let l = C64::new(0.3, -0.8);
        assert_eq!(e.scale(l).involute(), e.involute().scale(l.conj()));
    }

    #[test]
    fn involution_swaps_generator_families() {
        let alg = GrassmannAlgebra::new(3).unwrap();
        let z = alg.generator(1).unwrap();
        assert_eq!(z.involute(), alg.conjugate_generator(1).unwrap());
        assert_eq!(z.involute().involute(), z);
    }

    #[test]
    fn block_swap_matches_permutation_parity() {
        for p in 0..=5usize {
            for q in 0..=5usize {
                let perm: Vec<usize> = (p..p + q).chain(0..p).collect();
                let mask = vec![true; p + q];
                assert_eq!(
                    block_swap_sign(p, q),
                    fermi_sign(&perm, &mask),
                    "p={p} q={q}"
                );
            }
        }
    }

    #[test]
    fn block_swap_realized_by_wedge() {
        let alg = GrassmannAlgebra::new(6).unwrap();
        for (p, q) in [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)] {
            let mut a = alg.scalar(c(1.0));
            for i in 0..p {
                a = a.wedge(&alg.generator(i).unwrap()).unwrap();
            }
            let mut b = alg.scalar(c(1.0));
            for i in p..p + q {
                b = b.wedge(&alg.generator(i).unwrap()).unwrap();
            }
            let ab = a.wedge(&b).unwrap();
            let ba = b.wedge(&a).unwrap();
            assert_eq!(ab, ba.scale(c(block_swap_sign(p, q) as f64)), "p={p} q={q}");
        }
    }

    #[test]
    fn distribution_pairing_picks_the_graded_part() {
        let alg = GrassmannAlgebra::new(3).unwrap();
        let elem = alg
            .generator(0)
            .unwrap()
            .wedge(&alg.generator(2).unwrap())
            .unwrap()
            .scale(c(0.5))
            .add(&alg.scalar(c(9.0)))
            .unwrap();
        let t = |idx: &[usize]| c(idx[1] as f64 - idx[0] as f64);
        let v = pair_with_distribution(&elem, 2, &t).unwrap();
        // Only the (0,2) word contributes: t(0,2)·0.5 = 1.
        assert_eq!(v, c(1.0));
    }

    #[test]
    fn distribution_pairing_rejects_symmetric_tables() {
        let alg = GrassmannAlgebra::new(2).unwrap();
        let elem = alg
            .generator(0)
            .unwrap()
            .wedge(&alg.generator(1).unwrap())
            .unwrap();
        let bad = |idx: &[usize]| c((idx[0] + idx[1]) as f64);
        assert!(matches!(
            pair_with_distribution(&elem, 2, &bad),
            Err(GrassmannError::NotAntisymmetric { .. })
        ));
    }

    #[test]
    fn swapped_factors_flip_the_pairing() {
        let alg = GrassmannAlgebra::new(3).unwrap();
        let a = alg.generator(0).unwrap();
        let b = alg.generator(1).unwrap();
        let t = |idx: &[usize]| c((idx[1] * 3 + 1) as f64 - (idx[0] * 3 + 1) as f64);
        let v_ab = pair_with_distribution(&a.wedge(&b).unwrap(), 2, &t).unwrap();
        let v_ba = pair_with_distribution(&b.wedge(&a).unwrap(), 2, &t).unwrap();
        assert_eq!(v_ab, -v_ba);
    }
}
