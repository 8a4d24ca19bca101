//! Dense probability distributions on `F_2^n` and the exact Shannon
//! measures on them.
//!
//! Every distribution carries all `2^n` probabilities; the quantities in
//! this crate are global sums, so sparse layouts buy nothing at the
//! dimensions we target. Entropies accumulate in natural log in index
//! order (one conversion to bits at the end), keeping results reproducible
//! bit for bit.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;

use crate::consts::{
    COND_WEIGHT_MIN, DIST_FILE_SUM_TOL, DIST_SUM_TOL, SUPPORT_CUTOFF,
};
use crate::error::{check_dim_range, check_dims, Error, Result};
use crate::f2n::{parse_dim_header, Element, F2Set, Subspace};
use crate::fwht;

pub(crate) const LN_2: f64 = std::f64::consts::LN_2;

/// `Σ -p ln p` over a slice, skipping exact zeros, in index order.
pub(crate) fn neg_sum_p_ln_p(p: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &x in p {
        if x > 0.0 {
            acc -= x * x.ln();
        }
    }
    acc
}

pub(crate) fn entropy_bits(p: &[f64]) -> f64 {
    neg_sum_p_ln_p(p) / LN_2
}

/// A probability distribution over all of `F_2^n`.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct Dist {
    dim: usize,
    p: Vec<f64>,
}

impl Dist {
    /// Validates length `2^dim`, non-negativity, and total mass 1 within
    /// [`DIST_SUM_TOL`].
    pub fn new(dim: usize, p: Vec<f64>) -> Result<Self> {
        check_dim_range(dim)?;
        if p.len() != 1 << dim {
            return Err(Error::InvalidDist(format!(
                "expected {} entries for dim {dim}, got {}",
                1usize << dim,
                p.len()
            )));
        }
        if let Some(bad) = p.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidDist(format!("negative or non-finite entry {bad}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > DIST_SUM_TOL {
            return Err(Error::InvalidDist(format!("total mass {sum} is not 1")));
        }
        Ok(Dist { dim, p })
    }

    /// Normalizes arbitrary non-negative weights.
    pub fn from_weights(dim: usize, mut weights: Vec<f64>) -> Result<Self> {
        check_dim_range(dim)?;
        if weights.len() != 1 << dim {
            return Err(Error::InvalidDist(format!(
                "expected {} weights for dim {dim}, got {}",
                1usize << dim,
                weights.len()
            )));
        }
        if weights.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidDist("negative or non-finite weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidDist("weights sum to zero".into()));
        }
        for w in &mut weights {
            *w /= sum;
        }
        Ok(Dist { dim, p: weights })
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        check_dim_range(dim)?;
        let n = 1usize << dim;
        Ok(Dist {
            dim,
            p: vec![1.0 / n as f64; n],
        })
    }

    pub fn point_mass(dim: usize, x: u32) -> Result<Self> {
        check_dim_range(dim)?;
        if dim < 32 && x >> dim != 0 {
            return Err(Error::ElementOutOfRange { bits: x, dim });
        }
        let mut p = vec![0.0; 1 << dim];
        p[x as usize] = 1.0;
        Ok(Dist { dim, p })
    }

    pub fn uniform_on(set: &F2Set) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut p = vec![0.0; 1 << set.dim()];
        let w = 1.0 / set.len() as f64;
        for &m in set.members() {
            p[m as usize] = w;
        }
        Ok(Dist { dim: set.dim(), p })
    }

    pub fn uniform_on_subspace(v: &Subspace) -> Result<Self> {
        Dist::uniform_on_coset(v, 0)
    }

    pub fn uniform_on_coset(v: &Subspace, t: u32) -> Result<Self> {
        let mut p = vec![0.0; 1 << v.dim()];
        let w = 1.0 / v.span_size() as f64;
        for s in v.span_elements() {
            p[(s ^ t) as usize] = w;
        }
        Ok(Dist { dim: v.dim(), p })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn probability(&self, x: u32) -> f64 {
        self.p[x as usize]
    }

    /// Indices carrying mass above [`SUPPORT_CUTOFF`].
    pub fn support(&self) -> Vec<u32> {
        (0..self.p.len() as u32)
            .filter(|&x| self.p[x as usize] >= SUPPORT_CUTOFF)
            .collect()
    }

    /// Base-2 Shannon entropy, in `[0, dim]`.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.p)
    }

    /// The translate `X + s`.
    pub fn shift(&self, s: u32) -> Dist {
        let mut p = vec![0.0; self.p.len()];
        for (i, out) in p.iter_mut().enumerate() {
            *out = self.p[i ^ s as usize];
        }
        Dist { dim: self.dim, p }
    }

    /// Pushforward along a bijection of the index set.
    pub fn apply_bijection(&self, f: impl Fn(u32) -> u32) -> Dist {
        let mut p = vec![0.0; self.p.len()];
        for (i, &mass) in self.p.iter().enumerate() {
            p[f(i as u32) as usize] = mass;
        }
        Dist { dim: self.dim, p }
    }

    /// Index of the largest entry, smallest index on ties.
    pub fn argmax(&self) -> u32 {
        let mut best = 0usize;
        for (i, &x) in self.p.iter().enumerate() {
            if x > self.p[best] {
                best = i;
            }
        }
        best as u32
    }

    /// Translates the distribution so its argmax sits at 0. Two translates
    /// of the same distribution canonicalize to bit-identical vectors,
    /// which is what makes the τ functionals exactly translation
    /// invariant.
    pub fn canonical_translate(&self) -> Dist {
        let m = self.argmax();
        if m == 0 {
            self.clone()
        } else {
            self.shift(m)
        }
    }

    pub fn max_abs_diff(&self, other: &Dist) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn from_raw_normalized(dim: usize, mut p: Vec<f64>) -> Dist {
        let sum: f64 = p.iter().sum();
        debug_assert!(sum > 0.0);
        for x in &mut p {
            *x /= sum;
        }
        Dist { dim, p }
    }

    /// Reads the text format: a `dim=<n>` header, then `<binary> <prob>`
    /// lines; omitted elements are zero. The loader validates the total
    /// mass within [`DIST_FILE_SUM_TOL`] and renormalizes the decimal
    /// round-off away.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut dim = None;
        let mut p: Vec<f64> = Vec::new();
        let mut seen: Vec<bool> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if idx == 0 {
                let n = parse_dim_header(line, idx + 1)?;
                dim = Some(n);
                p = vec![0.0; 1 << n];
                seen = vec![false; 1 << n];
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let dim = dim.expect("header parsed first");
            let (elem, prob) = line.split_once(char::is_whitespace).ok_or(Error::Parse {
                line: idx + 1,
                msg: format!("expected '<element> <probability>', got {line:?}"),
            })?;
            let e = Element::from_binary_str(elem, dim).map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad element {elem:?} for dim {dim}"),
            })?;
            let prob: f64 = prob.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad probability {prob:?}"),
            })?;
            if !(0.0..=1.0 + DIST_FILE_SUM_TOL).contains(&prob) {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("probability {prob} outside [0, 1]"),
                });
            }
            let i = e.bits() as usize;
            if seen[i] {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("duplicate element {elem}"),
                });
            }
            seen[i] = true;
            p[i] = prob;
        }
        let dim = dim.ok_or(Error::Parse {
            line: 1,
            msg: "empty file, expected dim=<n> header".into(),
        })?;
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > DIST_FILE_SUM_TOL {
            return Err(Error::InvalidDist(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Dist::from_raw_normalized(dim, p))
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "dim={}", self.dim)?;
        for (i, &prob) in self.p.iter().enumerate() {
            if prob > 0.0 {
                let e = Element::new(i as u32, self.dim)?;
                writeln!(writer, "{} {:.17e}", e.to_binary_string(), prob)?;
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Dist::read(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::new();
        self.write(&mut out)?;
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Distribution of `X + Y` for independent `X`, `Y`, by fast transform.
/// Renormalized to repair transform drift.
pub fn xor_convolve(x: &Dist, y: &Dist) -> Result<Dist> {
    check_dims(x.dim, y.dim)?;
    let raw = fwht::xor_convolve_raw(&x.p, &y.p);
    Ok(Dist::from_raw_normalized(x.dim, raw))
}

/// Quadratic-time convolution used to cross-validate the transform path.
pub fn xor_convolve_direct(x: &Dist, y: &Dist) -> Result<Dist> {
    check_dims(x.dim, y.dim)?;
    let raw = fwht::xor_convolve_direct_raw(&x.p, &y.p);
    Ok(Dist::from_raw_normalized(x.dim, raw))
}

/// `D_KL(P ‖ Q)` in bits; `+∞` exactly when some support point of `P`
/// falls outside the support of `Q` (support per [`SUPPORT_CUTOFF`]).
pub fn kl_divergence(p: &Dist, q: &Dist) -> Result<f64> {
    check_dims(p.dim, q.dim)?;
    Ok(kl_raw(&p.p, &q.p))
}

pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi < SUPPORT_CUTOFF {
            continue;
        }
        if qi < SUPPORT_CUTOFF {
            return f64::INFINITY;
        }
        acc += pi * (pi / qi).ln();
    }
    (acc / LN_2).max(0.0)
}

/// `E_z D_KL(X|_{Z=z} ‖ Q)` over a conditional family.
pub fn kl_divergence_conditional(fam: &CondFamily, q: &Dist) -> Result<f64> {
    check_dims(fam.dim(), q.dim())?;
    let mut acc = 0.0;
    for cond in fam.conditions() {
        acc += cond.weight * kl_raw(&cond.dist.p, &q.p);
    }
    Ok(acc)
}

/// A joint distribution of two `F_2`-valued coordinates, row-major with the
/// first coordinate as the row.
#[derive(Clone, PartialEq, Debug)]
pub struct Joint2 {
    dims: (usize, usize),
    p: Vec<f64>,
}

impl Joint2 {
    pub fn new(dims: (usize, usize), p: Vec<f64>) -> Result<Self> {
        check_dim_range(dims.0)?;
        check_dim_range(dims.1)?;
        let len = 1usize << (dims.0 + dims.1);
        if p.len() != len {
            return Err(Error::InvalidDist(format!(
                "expected {len} entries for dims {dims:?}, got {}",
                p.len()
            )));
        }
        if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidDist("negative or non-finite entry".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > DIST_SUM_TOL {
            return Err(Error::InvalidDist(format!("total mass {sum} is not 1")));
        }
        Ok(Joint2 { dims, p })
    }

    pub fn from_weights(dims: (usize, usize), mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return Err(Error::InvalidDist("weights sum to zero".into()));
        }
        for w in &mut weights {
            *w /= sum;
        }
        Joint2::new(dims, weights)
    }

    /// Independent product `(X, Z)`.
    pub fn product(x: &Dist, z: &Dist) -> Joint2 {
        let cols = 1usize << z.dim;
        let mut p = vec![0.0; x.p.len() * z.p.len()];
        for (i, &xi) in x.p.iter().enumerate() {
            for (j, &zj) in z.p.iter().enumerate() {
                p[i * cols + j] = xi * zj;
            }
        }
        Joint2 {
            dims: (x.dim, z.dim),
            p,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    fn cols(&self) -> usize {
        1 << self.dims.1
    }

    pub fn marginal_first(&self) -> Dist {
        let cols = self.cols();
        let mut p = vec![0.0; 1 << self.dims.0];
        for (i, out) in p.iter_mut().enumerate() {
            *out = self.p[i * cols..(i + 1) * cols].iter().sum();
        }
        Dist {
            dim: self.dims.0,
            p,
        }
    }

    pub fn marginal_second(&self) -> Dist {
        let cols = self.cols();
        let mut p = vec![0.0; cols];
        for (i, &mass) in self.p.iter().enumerate() {
            p[i % cols] += mass;
        }
        Dist {
            dim: self.dims.1,
            p,
        }
    }

    /// Joint entropy `H(X, Z)` in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.p)
    }

    /// `I(X : Z) = H(X) + H(Z) - H(X, Z)`, clamped to 0 against round-off.
    pub fn mutual_information(&self) -> f64 {
        let i = self.marginal_first().entropy() + self.marginal_second().entropy()
            - self.entropy();
        if i < 0.0 && i > -crate::consts::IDENTITY_TOL {
            0.0
        } else {
            i
        }
    }

    /// `H(X | Z) = H(X, Z) - H(Z)`, the first coordinate conditioned on
    /// the second.
    pub fn conditional_entropy(&self) -> f64 {
        self.entropy() - self.marginal_second().entropy()
    }

    /// Splits into the family `{X|_{Z=z}}` weighted by `P(Z=z)`.
    pub fn condition_on_second(&self) -> Result<CondFamily> {
        let cols = self.cols();
        let rows = 1usize << self.dims.0;
        let mut conditions = Vec::new();
        for z in 0..cols {
            let weight: f64 = (0..rows).map(|i| self.p[i * cols + z]).sum();
            if weight <= 0.0 {
                continue;
            }
            let p: Vec<f64> = (0..rows).map(|i| self.p[i * cols + z] / weight).collect();
            conditions.push(Condition {
                label: z as u64,
                weight,
                dist: Dist::from_raw_normalized(self.dims.0, p),
            });
        }
        CondFamily::new(self.dims.0, conditions)
    }

    pub fn swap(&self) -> Joint2 {
        let cols = self.cols();
        let rows = 1usize << self.dims.0;
        let mut p = vec![0.0; self.p.len()];
        for i in 0..rows {
            for j in 0..cols {
                p[j * rows + i] = self.p[i * cols + j];
            }
        }
        Joint2 {
            dims: (self.dims.1, self.dims.0),
            p,
        }
    }
}

/// One conditioning event: a label, its probability, and the conditional
/// distribution given the event.
#[derive(Clone, Debug)]
pub struct Condition {
    pub label: u64,
    pub weight: f64,
    pub dist: Dist,
}

/// A weighted family of conditional distributions `X | Z = z`.
///
/// Events lighter than [`COND_WEIGHT_MIN`] are dropped and the remaining
/// weights renormalized.
#[derive(Clone, Debug)]
pub struct CondFamily {
    dim: usize,
    conditions: Vec<Condition>,
}

impl CondFamily {
    pub fn new(dim: usize, conditions: Vec<Condition>) -> Result<Self> {
        check_dim_range(dim)?;
        let mut kept: Vec<Condition> = conditions
            .into_iter()
            .filter(|c| c.weight >= COND_WEIGHT_MIN)
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let total: f64 = kept.iter().map(|c| c.weight).sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::InvalidDist(format!(
                "family weights sum to {total}"
            )));
        }
        for c in &mut kept {
            check_dims(c.dist.dim(), dim)?;
            c.weight /= total;
        }
        Ok(CondFamily {
            dim,
            conditions: kept,
        })
    }

    pub fn singleton(dist: Dist) -> Self {
        CondFamily {
            dim: dist.dim(),
            conditions: vec![Condition {
                label: 0,
                weight: 1.0,
                dist,
            }],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    /// `E_z H(X|_{Z=z})`, the averaged conditional entropy of the family.
    pub fn mean_entropy(&self) -> f64 {
        self.conditions
            .iter()
            .map(|c| c.weight * c.dist.entropy())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::IDENTITY_TOL;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn entropy_examples() {
        assert!(close(Dist::uniform(3).unwrap().entropy(), 3.0));
        assert!(close(Dist::point_mass(3, 5).unwrap().entropy(), 0.0));
        let a = F2Set::new(2, [0b00, 0b01, 0b10]).unwrap();
        let ua = Dist::uniform_on(&a).unwrap();
        assert!(close(ua.entropy(), 3f64.log2()));
    }

    #[test]
    fn kl_examples() {
        let a = F2Set::new(2, [0b00, 0b01, 0b10]).unwrap();
        let p = Dist::uniform_on(&a).unwrap();
        assert!(close(kl_divergence(&p, &p).unwrap(), 0.0));

        let point = Dist::point_mass(3, 0).unwrap();
        let uniform = Dist::uniform(3).unwrap();
        assert!(close(kl_divergence(&point, &uniform).unwrap(), 3.0));

        let two = Dist::uniform_on(&F2Set::new(2, [0b00, 0b01]).unwrap()).unwrap();
        let point2 = Dist::point_mass(2, 0).unwrap();
        assert_eq!(kl_divergence(&two, &point2).unwrap(), f64::INFINITY);
    }

    #[test]
    fn mutual_information_examples() {
        let x = Dist::uniform(2).unwrap();
        let z = Dist::uniform(2).unwrap();
        assert!(close(Joint2::product(&x, &z).mutual_information(), 0.0));

        // X = Z uniform on 2^2: I = H(X) = 2.
        let mut p = vec![0.0; 16];
        for i in 0..4 {
            p[i * 4 + i] = 0.25;
        }
        let j = Joint2::new((2, 2), p).unwrap();
        assert!(close(j.mutual_information(), 2.0));

        // Z = X ^ c: still a bijection of X, so I = H(X).
        let c = 0b11usize;
        let mut p = vec![0.0; 16];
        for i in 0..4 {
            p[i * 4 + (i ^ c)] = 0.25;
        }
        let j = Joint2::new((2, 2), p).unwrap();
        assert!(close(j.mutual_information(), 2.0));
    }

    #[test]
    fn conditional_entropy_examples() {
        let x = Dist::from_weights(2, vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let z = Dist::uniform(1).unwrap();
        let j = Joint2::product(&x, &z);
        assert!(close(j.conditional_entropy(), x.entropy()));

        // X = f(Z): H(X|Z) = 0.
        let mut p = vec![0.0; 8];
        p[0 * 2 + 0] = 0.5; // z=0 -> x=0
        p[3 * 2 + 1] = 0.5; // z=1 -> x=3
        let j = Joint2::new((2, 1), p).unwrap();
        assert!(close(j.conditional_entropy(), 0.0));

        // Two equally likely z, X uniform on a pair for each: H(X|Z) = 1.
        let mut p = vec![0.0; 8];
        p[0 * 2 + 0] = 0.25;
        p[1 * 2 + 0] = 0.25;
        p[2 * 2 + 1] = 0.25;
        p[3 * 2 + 1] = 0.25;
        let j = Joint2::new((2, 1), p).unwrap();
        assert!(close(j.conditional_entropy(), 1.0));
    }

    #[test]
    fn convolution_examples() {
        let pa = Dist::point_mass(3, 0b011).unwrap();
        let pb = Dist::point_mass(3, 0b110).unwrap();
        let conv = xor_convolve(&pa, &pb).unwrap();
        assert!(close(conv.probability(0b101), 1.0));

        let v = Subspace::from_vectors(3, &[0b011, 0b100]).unwrap();
        let uv = Dist::uniform_on_subspace(&v).unwrap();
        let conv = xor_convolve(&uv, &uv).unwrap();
        assert!(uv.max_abs_diff(&conv) < 1e-12);

        // (U_A, U_A) for A = {00, 01, 10}: nine ordered pairs.
        let a = F2Set::new(2, [0b00, 0b01, 0b10]).unwrap();
        let ua = Dist::uniform_on(&a).unwrap();
        let conv = xor_convolve(&ua, &ua).unwrap();
        let expect = [3.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0];
        for (i, &e) in expect.iter().enumerate() {
            assert!((conv.probability(i as u32) - e).abs() < 1e-12);
        }
    }

    #[test]
    fn dist_file_roundtrip_and_validation() {
        let a = F2Set::new(3, [0b000, 0b011, 0b111]).unwrap();
        let d = Dist::uniform_on(&a).unwrap();
        let mut buf = Vec::new();
        d.write(&mut buf).unwrap();
        let back = Dist::read(&buf[..]).unwrap();
        assert!(d.max_abs_diff(&back) < 1e-15);

        // Sum far from 1 is rejected.
        assert!(Dist::read("dim=2\n00 0.5\n".as_bytes()).is_err());
        // Duplicate element is rejected.
        assert!(Dist::read("dim=2\n00 0.5\n00 0.5\n".as_bytes()).is_err());
        // Malformed probability is rejected.
        assert!(Dist::read("dim=2\n00 half\n01 0.5\n".as_bytes()).is_err());
    }

    #[test]
    fn condition_family_drops_negligible_fibres() {
        let d0 = Dist::point_mass(2, 0).unwrap();
        let d1 = Dist::point_mass(2, 1).unwrap();
        let fam = CondFamily::new(
            2,
            vec![
                Condition { label: 0, weight: 1.0 - 1e-12, dist: d0 },
                Condition { label: 1, weight: 1e-12, dist: d1 },
            ],
        )
        .unwrap();
        assert_eq!(fam.len(), 1);
        assert!(close(fam.conditions()[0].weight, 1.0));
    }

    fn arb_dist(max_dim: usize) -> impl Strategy<Value = Dist> {
        (1..=max_dim).prop_flat_map(|dim| {
            proptest::collection::vec(1e-6f64..1.0, 1 << dim)
                .prop_map(move |w| Dist::from_weights(dim, w).unwrap())
        })
    }

    proptest! {
        #[test]
        fn subadditivity(raw in proptest::collection::vec(1e-6f64..1.0, 64)) {
            let j = Joint2::from_weights((3, 3), raw).unwrap();
            let slack = j.marginal_first().entropy() + j.marginal_second().entropy()
                - j.entropy();
            prop_assert!(slack >= -IDENTITY_TOL);
        }

        #[test]
        fn entropy_concave_and_kl_convex(p in arb_dist(4), q in arb_dist(4)) {
            prop_assume!(p.dim() == q.dim());
            for lambda in [0.0, 0.25, 0.5, 1.0] {
                let mix: Vec<f64> = p
                    .probabilities()
                    .iter()
                    .zip(q.probabilities())
                    .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                    .collect();
                let mix = Dist::new(p.dim(), mix).unwrap();
                let concave_slack = mix.entropy()
                    - (lambda * p.entropy() + (1.0 - lambda) * q.entropy());
                prop_assert!(concave_slack >= -IDENTITY_TOL);

                let convex_slack = lambda * kl_divergence(&p, &q).unwrap()
                    + (1.0 - lambda) * kl_divergence(&q, &p).unwrap()
                    - kl_raw(
                        &mix.probabilities(),
                        &q.probabilities()
                            .iter()
                            .zip(p.probabilities())
                            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                            .collect::<Vec<_>>(),
                    );
                prop_assert!(convex_slack >= -IDENTITY_TOL);
            }
        }

        #[test]
        fn entropy_and_kl_invariant_under_translation(p in arb_dist(5), q in arb_dist(5), s in any::<u32>()) {
            prop_assume!(p.dim() == q.dim());
            let s = s & ((1 << p.dim()) - 1);
            let ps = p.shift(s);
            let qs = q.shift(s);
            prop_assert!((ps.entropy() - p.entropy()).abs() < IDENTITY_TOL);
            let kl = kl_divergence(&p, &q).unwrap();
            let kls = kl_divergence(&ps, &qs).unwrap();
            prop_assert!((kl - kls).abs() < IDENTITY_TOL);
        }
    }
}
