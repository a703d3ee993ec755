//! Elementwise map with a runtime-selected AVX2 build of the same loop.
//!
//! No intrinsics: the scalar body is compiled twice and the wider copy is
//! picked when the CPU supports it. Results are bit-identical because Rust
//! never contracts `a * b + c` into an FMA on its own.

#[inline(always)]
fn map_scalar<T: Copy, O>(xs: &[T], out: &mut [O], f: impl Fn(T) -> O) {
    for (o, &x) in out.iter_mut().zip(xs) {
        *o = f(x);
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
fn map_avx2<T: Copy, O>(xs: &[T], out: &mut [O], f: impl Fn(T) -> O) {
    map_scalar(xs, out, f)
}

#[cfg(target_arch = "x86_64")]
fn has_avx2() -> bool {
    use std::sync::OnceLock;
    static AVX2: OnceLock<bool> = OnceLock::new();
    *AVX2.get_or_init(|| is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma"))
}

/// `out[i] = f(xs[i])` over the common length.
#[inline]
pub fn map_slice<T: Copy, O>(xs: &[T], out: &mut [O], f: impl Fn(T) -> O) {
    #[cfg(target_arch = "x86_64")]
    if has_avx2() {
        // SAFETY: the required CPU features were detected at runtime.
        return unsafe { map_avx2(xs, out, f) };
    }
    map_scalar(xs, out, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_scalar_loop() {
        let xs: Vec<f32> = (0..1000).map(|i| i as f32 * 0.37 - 100.0).collect();
        let f = |x: f32| (x * 1.5 + 2.0).abs();
        let mut a = vec![0.0; xs.len()];
        let mut b = vec![0.0; xs.len()];
        map_slice(&xs, &mut a, f);
        map_scalar(&xs, &mut b, f);
        assert_eq!(a, b);
    }
}
