//! Mixed-radix packing of symbol tuples, earliest position most significant.

/// Number of points in the product space with the given per-position sizes.
pub(crate) fn space_len(sizes: &[usize]) -> usize {
    sizes.iter().product()
}

/// Pack digits into a flat index. `digits[0]` is the most significant.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn pack(digits: &[usize], sizes: &[usize]) -> usize {
    debug_assert_eq!(digits.len(), sizes.len());
    let mut idx = 0;
    for (d, s) in digits.iter().zip(sizes) {
        debug_assert!(d < s);
        idx = idx * s + d;
    }
    idx
}

/// Unpack a flat index into digits, inverse of [`pack`].
pub(crate) fn unpack(mut idx: usize, sizes: &[usize], out: &mut [usize]) {
    debug_assert_eq!(out.len(), sizes.len());
    for k in (0..sizes.len()).rev() {
        out[k] = idx % sizes[k];
        idx /= sizes[k];
    }
    debug_assert_eq!(idx, 0);
}
