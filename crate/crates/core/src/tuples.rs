//! Mixed-radix encoding of tuples over `{0, …, d-1}`.
//!
//! The first coordinate is the most significant digit, so increasing indices
//! enumerate tuples in lexicographic order.

/// Index of `tuple` in lexicographic order over `D^len`.
#[inline]
pub fn encode(tuple: &[usize], domain_size: usize) -> usize {
    tuple.iter().fold(0, |acc, &t| acc * domain_size + t)
}

/// Inverse of [`encode`], writing into `out`.
#[inline]
pub fn decode(mut index: usize, domain_size: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = index % domain_size;
        index /= domain_size;
    }
}

/// Advance `tuple` to its lexicographic successor; `false` after the last one.
#[inline]
pub fn advance(tuple: &mut [usize], domain_size: usize) -> bool {
    for slot in tuple.iter_mut().rev() {
        *slot += 1;
        if *slot < domain_size {
            return true;
        }
        *slot = 0;
    }
    false
}

/// `domain_size^len` as `usize`; panics on overflow.
pub fn count(domain_size: usize, len: usize) -> usize {
    let mut acc = 1usize;
    for _ in 0..len {
        acc = acc.checked_mul(domain_size).expect("tuple space overflows usize");
    }
    acc
}
