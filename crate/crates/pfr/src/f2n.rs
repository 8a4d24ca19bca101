//! Group arithmetic over `F_2^n`.
//!
//! Elements are machine-word bitmasks (bit `i` is coordinate `i`), finite
//! sets keep a strictly sorted member list, and subspaces are stored as a
//! reduced row echelon basis so that equal subspaces compare equal
//! structurally. The file format puts the most significant bit (coordinate
//! `n-1`) first, matching how the binary strings read on the page.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{check_dim_range, check_dims, Error, Result};

/// A point of `F_2^n`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Element {
    bits: u32,
    dim: u8,
}

impl Element {
    pub fn new(bits: u32, dim: usize) -> Result<Self> {
        check_dim_range(dim)?;
        if dim < 32 && bits >> dim != 0 {
            return Err(Error::ElementOutOfRange { bits, dim });
        }
        Ok(Element {
            bits,
            dim: dim as u8,
        })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Element::new(0, dim)
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn dim(self) -> usize {
        self.dim as usize
    }

    /// Group addition (bitwise XOR). Panics on mixed dimensions; the
    /// set-level operations validate dimensions up front.
    pub fn xor(self, other: Element) -> Element {
        assert_eq!(self.dim, other.dim, "xor across dimensions");
        Element {
            bits: self.bits ^ other.bits,
            dim: self.dim,
        }
    }

    /// Parses a binary string of exactly `dim` characters, most significant
    /// coordinate first.
    pub fn from_binary_str(s: &str, dim: usize) -> Result<Self> {
        check_dim_range(dim)?;
        if s.len() != dim || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {dim} binary digits, got {s:?}"),
            });
        }
        let bits = u32::from_str_radix(s, 2).expect("validated binary digits");
        Element::new(bits, dim)
    }

    pub fn to_binary_string(self) -> String {
        format!("{:0width$b}", self.bits, width = self.dim())
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_binary_string())
    }
}

impl std::ops::BitXor for Element {
    type Output = Element;
    fn bitxor(self, rhs: Element) -> Element {
        self.xor(rhs)
    }
}

/// A finite, duplicate-free subset of `F_2^n`, stored strictly sorted.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct F2Set {
    dim: usize,
    members: Vec<u32>,
}

impl F2Set {
    /// Builds a set from raw bitmasks, sorting and collapsing duplicates.
    pub fn new(dim: usize, members: impl IntoIterator<Item = u32>) -> Result<Self> {
        check_dim_range(dim)?;
        let mut members: Vec<u32> = members.into_iter().collect();
        for &m in &members {
            if dim < 32 && m >> dim != 0 {
                return Err(Error::ElementOutOfRange { bits: m, dim });
            }
        }
        members.sort_unstable();
        members.dedup();
        Ok(F2Set { dim, members })
    }

    pub fn from_elements(dim: usize, elements: &[Element]) -> Result<Self> {
        for e in elements {
            check_dims(e.dim(), dim)?;
        }
        F2Set::new(dim, elements.iter().map(|e| e.bits()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        let dim = self.dim;
        self.members.iter().map(move |&m| Element {
            bits: m,
            dim: dim as u8,
        })
    }

    pub fn contains(&self, bits: u32) -> bool {
        self.members.binary_search(&bits).is_ok()
    }

    /// The sumset `{a + b : a ∈ self, b ∈ other}`, exact and sorted.
    pub fn sumset(&self, other: &F2Set) -> Result<F2Set> {
        check_dims(self.dim, other.dim)?;
        let words = (1usize << self.dim).div_ceil(64);
        let mut seen = vec![0u64; words];
        for &a in &self.members {
            for &b in &other.members {
                let s = (a ^ b) as usize;
                seen[s >> 6] |= 1u64 << (s & 63);
            }
        }
        let mut members = Vec::new();
        for (w, &word) in seen.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let tz = bits.trailing_zeros() as usize;
                members.push(((w << 6) | tz) as u32);
                bits &= bits - 1;
            }
        }
        Ok(F2Set {
            dim: self.dim,
            members,
        })
    }

    /// `|A+A| / |A|`.
    pub fn doubling_constant(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptySet);
        }
        let double = self.sumset(self)?;
        Ok(double.len() as f64 / self.len() as f64)
    }

    /// Members lying in the coset `V + t`.
    pub fn intersect_coset(&self, v: &Subspace, t: u32) -> Result<F2Set> {
        check_dims(self.dim, v.dim())?;
        let rep = v.coset_rep(t);
        F2Set::new(
            self.dim,
            self.members.iter().copied().filter(|&m| v.coset_rep(m) == rep),
        )
    }

    /// Reads the text format: a `dim=<n>` header, then one element per line
    /// as a binary string of exactly `n` characters.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut dim = None;
        let mut members = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if idx == 0 {
                let n = parse_dim_header(line, idx + 1)?;
                dim = Some(n);
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let dim = dim.expect("header parsed first");
            let e = Element::from_binary_str(line, dim).map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("expected {dim} binary digits, got {line:?}"),
            })?;
            members.push(e.bits());
        }
        let dim = dim.ok_or(Error::Parse {
            line: 1,
            msg: "empty file, expected dim=<n> header".into(),
        })?;
        F2Set::new(dim, members)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "dim={}", self.dim)?;
        for e in self.elements() {
            writeln!(writer, "{}", e.to_binary_string())?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        F2Set::read(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::new();
        self.write(&mut out)?;
        std::fs::write(path, out)?;
        Ok(())
    }
}

pub(crate) fn parse_dim_header(line: &str, line_no: usize) -> Result<usize> {
    let n = line
        .strip_prefix("dim=")
        .and_then(|rest| rest.parse::<usize>().ok())
        .ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("expected dim=<n> header, got {line:?}"),
        })?;
    check_dim_range(n)?;
    Ok(n)
}

/// A linear subspace of `F_2^n` held as a reduced row echelon basis.
///
/// Basis rows are stored in decreasing pivot order; each pivot bit is the
/// most significant bit of its row and is clear in every other row. The
/// form is canonical, so `==` decides subspace equality.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Subspace {
    dim: usize,
    basis: Vec<u32>,
}

impl Subspace {
    /// Canonicalizes any spanning list into the RREF basis.
    pub fn from_vectors(dim: usize, vectors: &[u32]) -> Result<Self> {
        check_dim_range(dim)?;
        for &v in vectors {
            if dim < 32 && v >> dim != 0 {
                return Err(Error::ElementOutOfRange { bits: v, dim });
            }
        }
        let mut rows: Vec<u32> = vectors.iter().copied().filter(|&v| v != 0).collect();
        let mut basis: Vec<u32> = Vec::new();
        for col in (0..dim).rev() {
            let Some(i) = rows.iter().position(|&r| r >> col & 1 == 1) else {
                continue;
            };
            let pivot = rows.swap_remove(i);
            for r in &mut rows {
                if *r >> col & 1 == 1 {
                    *r ^= pivot;
                }
            }
            for b in &mut basis {
                if *b >> col & 1 == 1 {
                    *b ^= pivot;
                }
            }
            basis.push(pivot);
        }
        Ok(Subspace { dim, basis })
    }

    pub fn from_elements(dim: usize, elements: &[Element]) -> Result<Self> {
        for e in elements {
            check_dims(e.dim(), dim)?;
        }
        let vecs: Vec<u32> = elements.iter().map(|e| e.bits()).collect();
        Subspace::from_vectors(dim, &vecs)
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Subspace::from_vectors(dim, &[])
    }

    pub fn full(dim: usize) -> Result<Self> {
        let vecs: Vec<u32> = (0..dim).map(|i| 1u32 << i).collect();
        Subspace::from_vectors(dim, &vecs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[u32] {
        &self.basis
    }

    pub fn span_size(&self) -> u64 {
        1u64 << self.rank()
    }

    /// Canonical representative of the coset `x + V`: greedily clearing the
    /// pivot bits yields the minimum element of the coset.
    pub fn coset_rep(&self, mut x: u32) -> u32 {
        for &b in &self.basis {
            let pivot = 31 - b.leading_zeros();
            if x >> pivot & 1 == 1 {
                x ^= b;
            }
        }
        x
    }

    pub fn contains(&self, x: u32) -> bool {
        self.coset_rep(x) == 0
    }

    /// All `2^rank` span members, sorted.
    pub fn span_elements(&self) -> Vec<u32> {
        let mut out = vec![0u32];
        for &b in &self.basis {
            let prev = out.len();
            for i in 0..prev {
                out.push(out[i] ^ b);
            }
        }
        out.sort_unstable();
        out
    }

    pub fn member_set(&self) -> F2Set {
        F2Set {
            dim: self.dim,
            members: self.span_elements(),
        }
    }
}

/// A translate `V + t` maximizing `|A ∩ (V + t)|`, with that maximum.
///
/// Ties are broken toward the smallest canonical coset representative; the
/// returned translate is itself that representative.
pub fn coset_intersection_max(a: &F2Set, v: &Subspace) -> Result<(Element, usize)> {
    check_dims(a.dim(), v.dim())?;
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &m in a.members() {
        *counts.entry(v.coset_rep(m)).or_insert(0) += 1;
    }
    let (&rep, &size) = counts
        .iter()
        .max_by_key(|&(&rep, &count)| (count, std::cmp::Reverse(rep)))
        .expect("nonempty counts");
    Ok((Element::new(rep, a.dim())?, size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(dim: usize, members: &[u32]) -> F2Set {
        F2Set::new(dim, members.iter().copied()).unwrap()
    }

    #[test]
    fn rref_canonicalizes_span() {
        // {011, 001} reduces to {010, 001}
        let v = Subspace::from_vectors(3, &[0b011, 0b001]).unwrap();
        assert_eq!(v.basis(), &[0b010, 0b001]);
        assert_eq!(v.rank(), 2);

        let empty = Subspace::from_vectors(3, &[]).unwrap();
        assert_eq!(empty.rank(), 0);

        let dup = Subspace::from_vectors(3, &[0b101, 0b101]).unwrap();
        assert_eq!(dup.basis(), &[0b101]);
        assert_eq!(dup.rank(), 1);
    }

    #[test]
    fn membership_by_pivot_reduction() {
        let v = Subspace::from_vectors(3, &[0b010, 0b001]).unwrap();
        assert!(v.contains(0b011));
        assert!(!v.contains(0b100));
        let zero = Subspace::zero(3).unwrap();
        assert!(zero.contains(0));
        assert!(!zero.contains(1));
    }

    #[test]
    fn sumset_examples() {
        let a = set(2, &[0b00, 0b01, 0b10]);
        let aa = a.sumset(&a).unwrap();
        assert_eq!(aa.members(), &[0b00, 0b01, 0b10, 0b11]);

        let v = Subspace::from_vectors(3, &[0b011, 0b101]).unwrap().member_set();
        assert_eq!(v.sumset(&v).unwrap(), v);

        let single = set(3, &[0b101]);
        assert_eq!(single.sumset(&single).unwrap().members(), &[0]);
    }

    #[test]
    fn doubling_constant_examples() {
        let a = set(2, &[0b00, 0b01, 0b10]);
        assert!((a.doubling_constant().unwrap() - 4.0 / 3.0).abs() < 1e-15);

        let v = Subspace::from_vectors(4, &[0b0011, 0b0101]).unwrap().member_set();
        assert_eq!(v.doubling_constant().unwrap(), 1.0);

        let zero = set(3, &[0]);
        assert_eq!(zero.doubling_constant().unwrap(), 1.0);
        assert!(matches!(
            F2Set::new(3, []).unwrap().doubling_constant(),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn coset_intersection_examples() {
        let a = set(2, &[0b00, 0b01, 0b10]);
        let v = Subspace::from_vectors(2, &[0b01]).unwrap();
        let (t, size) = coset_intersection_max(&a, &v).unwrap();
        assert_eq!(t.bits(), 0b00);
        assert_eq!(size, 2);

        // A inside V: the zero translate captures everything.
        let v2 = Subspace::from_vectors(2, &[0b01, 0b10]).unwrap();
        let (t2, size2) = coset_intersection_max(&a, &v2).unwrap();
        assert_eq!(t2.bits(), 0);
        assert_eq!(size2, 3);

        // Rank-0 subspace: singleton cosets, smallest member wins the tie.
        let zero = Subspace::zero(2).unwrap();
        let (t3, size3) = coset_intersection_max(&a, &zero).unwrap();
        assert_eq!(t3.bits(), 0b00);
        assert_eq!(size3, 1);
    }

    #[test]
    fn set_file_roundtrip_and_rejection() {
        let a = set(3, &[0b000, 0b011, 0b101]);
        let mut buf = Vec::new();
        a.write(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "dim=3\n000\n011\n101\n"
        );
        let back = F2Set::read(&buf[..]).unwrap();
        assert_eq!(back, a);

        for bad in [
            "dim=3\n01\n",       // wrong length
            "dim=3\n012\n",      // non-binary digit
            "n=3\n000\n",        // malformed header
            "dim=0\n",           // dimension out of range
            "dim=25\n",          // dimension above the cap
            "",                  // empty file
        ] {
            assert!(F2Set::read(bad.as_bytes()).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn element_binary_string_is_msb_first() {
        let e = Element::from_binary_str("100", 3).unwrap();
        assert_eq!(e.bits(), 4);
        assert_eq!(e.to_binary_string(), "100");
    }

    fn arb_set(max_dim: usize) -> impl Strategy<Value = F2Set> {
        (1..=max_dim).prop_flat_map(|dim| {
            proptest::collection::vec(0u32..(1 << dim), 1..=(1 << dim))
                .prop_map(move |members| F2Set::new(dim, members).unwrap())
        })
    }

    proptest! {
        #[test]
        fn sumset_size_bounds(a in arb_set(6)) {
            let aa = a.sumset(&a).unwrap();
            prop_assert!(aa.len() >= a.len());
            prop_assert!(aa.len() <= (a.len() * a.len()).min(1 << a.dim()));
        }

        #[test]
        fn doubling_one_iff_coset(a in arb_set(6)) {
            let aa = a.sumset(&a).unwrap();
            // |A+A| = |A| exactly when A is a coset of a subspace.
            let a0 = a.members()[0];
            let diffs: Vec<u32> = a.members().iter().map(|&m| m ^ a0).collect();
            let v = Subspace::from_vectors(a.dim(), &diffs).unwrap();
            let is_coset = v.span_size() == a.len() as u64;
            prop_assert_eq!(aa.len() == a.len(), is_coset);
        }

        #[test]
        fn sumset_commutes_and_contains(a in arb_set(5), b in arb_set(5)) {
            prop_assume!(a.dim() == b.dim());
            let ab = a.sumset(&b).unwrap();
            let ba = b.sumset(&a).unwrap();
            prop_assert_eq!(&ab, &ba);
            if b.contains(0) {
                for &m in a.members() {
                    prop_assert!(ab.contains(m));
                }
            }
        }

        #[test]
        fn rref_idempotent(a in arb_set(6)) {
            let v = Subspace::from_vectors(a.dim(), a.members()).unwrap();
            let again = Subspace::from_vectors(a.dim(), v.basis()).unwrap();
            prop_assert_eq!(&v, &again);
            for &m in a.members() {
                prop_assert!(v.contains(m));
            }
        }

        #[test]
        fn coset_rep_is_coset_minimum(a in arb_set(5)) {
            let v = Subspace::from_vectors(a.dim(), &a.members()[..a.len().min(3)]).unwrap();
            for &m in a.members() {
                let rep = v.coset_rep(m);
                let min = v
                    .span_elements()
                    .iter()
                    .map(|&s| s ^ m)
                    .min()
                    .unwrap();
                prop_assert_eq!(rep, min);
                prop_assert!(v.contains(rep ^ m));
            }
        }

        #[test]
        fn max_slice_times_coset_count_covers(a in arb_set(5)) {
            let v = Subspace::from_vectors(a.dim(), &a.members()[..a.len().min(2)]).unwrap();
            let (_, size) = coset_intersection_max(&a, &v).unwrap();
            let mut reps: Vec<u32> = a.members().iter().map(|&m| v.coset_rep(m)).collect();
            reps.sort_unstable();
            reps.dedup();
            prop_assert!(size * reps.len() >= a.len());
        }
    }
}
