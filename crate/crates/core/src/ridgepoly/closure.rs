//! Vanishing ideal of the planes `{(αw, βw)}` and the differential
//! membership test.
//!
//! On a point `(x, y) = (αw, βw)` of `ℝ²ⁿ` a monomial `x^{m̄} y^{m̲}` equals
//! `α^{|m̄|} β^{|m̲|} w^{m̄+m̲}`, so a polynomial vanishes on all such points
//! exactly when, for every `s` and `l`, the coefficients with
//! `m̄ + m̲ = s` and `|m̄| = l` sum to zero. The binomials
//! `x^κ y^{s−κ} − x^m y^{s−m}` with `κ, m ∈ Δ_{s,l}` span that space in
//! each degree.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ridgepoly::mpoly::MPoly;
use crate::ridgepoly::multiindex::MultiIndex;

/// Default cap on the half-dimension `n`.
pub const MAX_HALF_DIM: usize = 4;
/// Default cap on the degree `k`.
pub const MAX_DEGREE: u32 = 8;

/// `Δ_{s,l} = { m̄ : 0 ≤ m̄_i ≤ s_i, |m̄| = l }`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaSet {
    pub s: MultiIndex,
    pub l: u32,
    /// Members in descending lexicographic order, so that the `x_1`-heavy
    /// index comes first.
    pub members: Vec<MultiIndex>,
}

impl DeltaSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, m: &MultiIndex) -> bool {
        m.is_dominated_by(&self.s) && m.degree() == self.l
    }
}

pub fn enumerate_delta(s: &MultiIndex, l: u32) -> Result<DeltaSet> {
    if l > s.degree() {
        return Err(Error::input(format!("l = {l} exceeds |s| = {}", s.degree())));
    }
    let mut members = Vec::new();
    let mut cur = vec![0u32; s.len()];
    fill_delta(s.exponents(), 0, l, &mut cur, &mut members);
    Ok(DeltaSet {
        s: s.clone(),
        l,
        members,
    })
}

fn fill_delta(s: &[u32], pos: usize, rest: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos == s.len() {
        if rest == 0 {
            out.push(MultiIndex::new(cur.clone()));
        }
        return;
    }
    // what the remaining coordinates can still absorb
    let tail: u32 = s[pos + 1..].iter().sum();
    let hi = s[pos].min(rest);
    let lo = rest.saturating_sub(tail);
    for v in (lo..=hi).rev() {
        cur[pos] = v;
        fill_delta(s, pos + 1, rest - v, cur, out);
    }
    cur[pos] = 0;
}

/// `E(m̄, m̲) = (m̄, m̄ + m̲)`.
pub fn index_e(full: &MultiIndex) -> (MultiIndex, MultiIndex) {
    let (bar, under) = full.split_halves();
    let s = bar.add(&under);
    (bar, s)
}

/// `B = E⁻¹`: `(m̄, s) ↦ (m̄, s − m̄)`, defined for `m̄ ≤ s`.
pub fn index_b(bar: &MultiIndex, s: &MultiIndex) -> Option<MultiIndex> {
    s.checked_sub(bar).map(|under| bar.concat(&under))
}

/// One basis binomial with its labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisElement {
    pub s: MultiIndex,
    pub l: u32,
    pub kappa: MultiIndex,
    pub m: MultiIndex,
    pub poly: MPoly,
}

fn check_caps(n: usize, k: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::input("half-dimension n must be at least 1"));
    }
    if n > MAX_HALF_DIM || k > MAX_DEGREE {
        return Err(Error::input(format!(
            "n = {n}, k = {k} exceeds the supported range n <= {MAX_HALF_DIM}, k <= {MAX_DEGREE}"
        )));
    }
    Ok(())
}

/// The binomials `x^κ y^{s−κ} − x^m y^{s−m}` of degree `k` in `2n`
/// variables, with `κ` the first member of each `Δ_{s,l}`.
pub fn vanishing_basis_elements(n: usize, k: u32) -> Result<Vec<BasisElement>> {
    check_caps(n, k)?;
    let mut out = Vec::new();
    for s in MultiIndex::all_of_degree(n, k) {
        for l in 1..k {
            let delta = enumerate_delta(&s, l)?;
            let Some((kappa, rest)) = delta.members.split_first() else {
                continue;
            };
            let head = index_b(kappa, &s).expect("member of delta is dominated by s");
            for m in rest {
                let other = index_b(m, &s).expect("member of delta is dominated by s");
                let poly = MPoly::from_terms(
                    2 * n,
                    [(head.clone(), BigRational::one()), (other, -BigRational::one())],
                )?;
                out.push(BasisElement {
                    s: s.clone(),
                    l,
                    kappa: kappa.clone(),
                    m: m.clone(),
                    poly,
                });
            }
        }
    }
    Ok(out)
}

pub fn vanishing_basis(n: usize, k: u32) -> Result<Vec<MPoly>> {
    Ok(vanishing_basis_elements(n, k)?.into_iter().map(|e| e.poly).collect())
}

fn half_dim(p: &MPoly) -> Result<usize> {
    let nv = p.n_vars();
    if nv == 0 || nv % 2 != 0 {
        return Err(Error::input(format!("expected an even number of variables, got {nv}")));
    }
    Ok(nv / 2)
}

/// Coefficient sums of `p` grouped by `(s, l)`.
pub fn group_sums(p: &MPoly) -> Result<BTreeMap<(MultiIndex, u32), BigRational>> {
    half_dim(p)?;
    let mut groups: BTreeMap<(MultiIndex, u32), BigRational> = BTreeMap::new();
    for (idx, c) in p.terms() {
        let (bar, s) = index_e(idx);
        *groups.entry((s, bar.degree())).or_insert_with(BigRational::zero) += c;
    }
    Ok(groups)
}

/// Whether `p(αw, βw) = 0` for all `α, β ∈ ℝ`, `w ∈ ℝⁿ`, decided exactly.
pub fn vanishes_on_l(p: &MPoly) -> Result<bool> {
    Ok(group_sums(p)?.values().all(Zero::is_zero))
}

/// A point `(αw, βw)` where `p` is visibly nonzero: `|p| > 1e-6 · scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub alpha: f64,
    pub beta: f64,
    pub w: Vec<f64>,
    pub value: f64,
    pub scale: f64,
}

impl Witness {
    pub fn point(&self) -> Vec<f64> {
        point_on_l(self.alpha, self.beta, &self.w)
    }
}

pub fn point_on_l(alpha: f64, beta: f64, w: &[f64]) -> Vec<f64> {
    w.iter().map(|v| alpha * v).chain(w.iter().map(|v| beta * v)).collect()
}

const WITNESS_TRIES: usize = 10_000;

/// Searches random points of the planes for a witness of non-vanishing.
/// Returns `None` when `p` vanishes there.
pub fn find_witness(p: &MPoly, seed: u64) -> Result<Option<Witness>> {
    let n = half_dim(p)?;
    if vanishes_on_l(p)? {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Witness> = None;
    for _ in 0..WITNESS_TRIES {
        let alpha: f64 = StandardNormal.sample(&mut rng);
        let beta: f64 = StandardNormal.sample(&mut rng);
        let w: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let z = point_on_l(alpha, beta, &w);
        let value = p.eval_f64(&z)?;
        let scale = p.eval_scale(&z)?;
        let cand = Witness {
            alpha,
            beta,
            w,
            value,
            scale,
        };
        if value.abs() > 1e-6 * scale {
            return Ok(Some(cand));
        }
        let ratio = |c: &Witness| c.value.abs() / c.scale.max(f64::MIN_POSITIVE);
        if best.as_ref().map_or(true, |b| ratio(&cand) > ratio(b)) {
            best = Some(cand);
        }
    }
    // the exact test says nonzero; report the strongest point seen
    Ok(best)
}

/// `∂^m z^e = Π e_i!/(e_i − m_i)! · z^{e−m}`, or 0 if some `m_i > e_i`.
fn differentiate_monomial(m: &MultiIndex, e: &MultiIndex) -> Option<(MultiIndex, BigInt)> {
    let rest = e.checked_sub(m)?;
    let mut factor = BigInt::one();
    for (&ei, &mi) in e.exponents().iter().zip(m.exponents()) {
        for t in (ei - mi + 1)..=ei {
            factor *= t;
        }
    }
    Some((rest, factor))
}

/// `p(D) q = Σ_m p_m ∂^m q`.
pub fn apply_diff(p: &MPoly, q: &MPoly) -> Result<MPoly> {
    if p.n_vars() != q.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: p.n_vars(),
            found: q.n_vars(),
        });
    }
    let mut out = MPoly::zero(q.n_vars());
    for (m, pm) in p.terms() {
        for (e, qe) in q.terms() {
            if let Some((rest, factor)) = differentiate_monomial(m, e) {
                out.add_term(rest, pm * qe * BigRational::from_integer(factor));
            }
        }
    }
    Ok(out)
}

/// Outcome of [`closure_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureVerdict {
    pub member: bool,
    /// A basis polynomial `p` with `p(D) q ≠ 0`, and that value.
    pub witness: Option<(BasisElement, MPoly)>,
}

/// Decides `p(D) q = 0` for every vanishing binomial `p` of the degree of
/// the homogeneous polynomial `q`.
pub fn closure_check(q: &MPoly) -> Result<ClosureVerdict> {
    let n = half_dim(q)?;
    let Some(k) = q.homogeneous_degree()? else {
        return Ok(ClosureVerdict {
            member: true,
            witness: None,
        });
    };
    check_caps(n, k)?;
    for e in vanishing_basis_elements(n, k)? {
        let r = apply_diff(&e.poly, q)?;
        if !r.is_zero() {
            return Ok(ClosureVerdict {
                member: false,
                witness: Some((e, r)),
            });
        }
    }
    Ok(ClosureVerdict {
        member: true,
        witness: None,
    })
}

pub fn in_closure_homogeneous(q: &MPoly) -> Result<bool> {
    Ok(closure_check(q)?.member)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ridgepoly::mpoly::integer;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn var(i: usize) -> MPoly {
        MPoly::variable(4, i)
    }

    fn wedge() -> MPoly {
        &(&var(0) * &var(3)) - &(&var(1) * &var(2))
    }

    #[test]
    fn delta_examples() {
        assert_eq!(
            enumerate_delta(&mi(&[1, 1]), 1).unwrap().members,
            vec![mi(&[1, 0]), mi(&[0, 1])]
        );
        assert_eq!(
            enumerate_delta(&mi(&[2, 0, 0]), 1).unwrap().members,
            vec![mi(&[1, 0, 0])]
        );
        assert_eq!(
            enumerate_delta(&mi(&[3, 1, 2]), 0).unwrap().members,
            vec![mi(&[0, 0, 0])]
        );
        assert!(enumerate_delta(&mi(&[1, 1]), 3).is_err());
    }

    #[test]
    fn basis_for_two_variables_degree_two() {
        let b = vanishing_basis(2, 2).unwrap();
        assert_eq!(b, vec![wedge()]);
    }

    #[test]
    fn vanishing_examples() {
        assert!(vanishes_on_l(&wedge()).unwrap());
        let x1y1 = &var(0) * &var(2);
        assert!(!vanishes_on_l(&x1y1).unwrap());
        assert!(vanishes_on_l(&MPoly::zero(4)).unwrap());
        let w = find_witness(&x1y1, 1).unwrap().unwrap();
        assert!(w.value.abs() > 1e-6 * w.scale);
        assert!(find_witness(&wedge(), 1).unwrap().is_none());
    }

    #[test]
    fn index_maps_invert() {
        let full = mi(&[2, 0, 1, 3]);
        let (bar, s) = index_e(&full);
        assert_eq!(s, mi(&[3, 3]));
        assert_eq!(index_b(&bar, &s), Some(full));
        assert_eq!(index_b(&mi(&[4, 0]), &s), None);
    }

    #[test]
    fn differentiation_examples() {
        let q = &(&(&var(0) * &var(0)) + &(&var(1) * &var(1))) * &(&(&var(2) * &var(2)) + &(&var(3) * &var(3)));
        let r = apply_diff(&wedge(), &q).unwrap();
        let want = &(&var(0) * &var(3)).scale(&integer(4)) - &(&var(1) * &var(2)).scale(&integer(4));
        assert_eq!(r, want);
        assert_eq!(apply_diff(&MPoly::one(4), &q).unwrap(), q);
        let x = MPoly::variable(1, 0);
        assert_eq!(apply_diff(&x, &x.pow(3)).unwrap(), x.pow(2).scale(&integer(3)));
        assert_eq!(apply_diff(&wedge(), &wedge()).unwrap(), MPoly::constant(4, integer(2)));
    }

    #[test]
    fn membership_examples() {
        assert!(in_closure_homogeneous(&var(0).pow(2)).unwrap());
        let sq = |a: usize, b: usize, sign: i64| &var(a).pow(2) + &var(b).pow(2).scale(&integer(sign));
        assert!(!in_closure_homogeneous(&(&sq(0, 1, 1) * &sq(2, 3, 1))).unwrap());
        assert!(!in_closure_homogeneous(&(&sq(0, 1, -1) * &sq(2, 3, -1))).unwrap());
        assert!(!in_closure_homogeneous(&wedge()).unwrap());
        let mixed = &var(0) + &var(0).pow(2);
        assert!(matches!(
            in_closure_homogeneous(&mixed),
            Err(Error::NotHomogeneous { .. })
        ));
    }

    #[test]
    fn caps_enforced() {
        assert!(vanishing_basis(5, 2).is_err());
        assert!(vanishing_basis(2, 9).is_err());
    }
}
