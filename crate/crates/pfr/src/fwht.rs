//! In-place Walsh-Hadamard transform and XOR convolution on dense vectors.
//!
//! The transform is its own inverse up to a factor of `len`, so an XOR
//! convolution is three transforms and a pointwise product, `O(n·2^n)`
//! against the `O(4^n)` direct sum. The direct version stays around as the
//! cross-validation oracle.

/// Unnormalized Walsh-Hadamard transform. `data.len()` must be a power of
/// two.
pub fn wht_in_place(data: &mut [f64]) {
    debug_assert!(data.len().is_power_of_two());
    let mut h = 1;
    while h < data.len() {
        for chunk in data.chunks_exact_mut(h * 2) {
            let (lo, hi) = chunk.split_at_mut(h);
            for i in 0..h {
                let x = lo[i];
                let y = hi[i];
                lo[i] = x + y;
                hi[i] = x - y;
            }
        }
        h *= 2;
    }
}

/// XOR convolution `c[k] = Σ_{i^j=k} p[i]·q[j]` via the transform.
///
/// Round-off can leave entries a hair negative where the true value is
/// zero; those are clamped before returning.
pub fn xor_convolve_raw(p: &[f64], q: &[f64]) -> Vec<f64> {
    assert_eq!(p.len(), q.len());
    let mut fp = p.to_vec();
    let mut fq = q.to_vec();
    wht_in_place(&mut fp);
    wht_in_place(&mut fq);
    for (a, &b) in fp.iter_mut().zip(fq.iter()) {
        *a *= b;
    }
    wht_in_place(&mut fp);
    let scale = 1.0 / p.len() as f64;
    for a in &mut fp {
        *a = (*a * scale).max(0.0);
    }
    fp
}

/// Direct quadratic XOR convolution; the oracle for [`xor_convolve_raw`].
pub fn xor_convolve_direct_raw(p: &[f64], q: &[f64]) -> Vec<f64> {
    assert_eq!(p.len(), q.len());
    let mut out = vec![0.0; p.len()];
    for (i, &pi) in p.iter().enumerate() {
        if pi == 0.0 {
            continue;
        }
        for (j, &qj) in q.iter().enumerate() {
            out[i ^ j] += pi * qj;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn transform_is_involutive_up_to_len() {
        let orig = vec![0.3, 0.1, 0.4, 0.2];
        let mut data = orig.clone();
        wht_in_place(&mut data);
        wht_in_place(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / 4.0 - b).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn fast_matches_direct(
            n in 1usize..=8,
            raw in proptest::collection::vec(0.0f64..1.0, 1 << 8),
        ) {
            let len = 1 << n;
            let sum: f64 = raw[..len].iter().sum();
            prop_assume!(sum > 1e-9);
            let p: Vec<f64> = raw[..len].iter().map(|x| x / sum).collect();
            let q: Vec<f64> = raw[..len].iter().rev().map(|x| x / sum).collect();
            let fast = xor_convolve_raw(&p, &q);
            let direct = xor_convolve_direct_raw(&p, &q);
            for (a, b) in fast.iter().zip(&direct) {
                prop_assert!((a - b).abs() < crate::consts::FWHT_AGREEMENT_TOL);
            }
        }
    }
}
