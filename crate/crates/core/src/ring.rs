//! Arithmetic in `Z_{2^n}` for `n <= 128`, with a two's-complement reading of
//! every element, and the fixed-point mapping `v -> floor(v * 2^d)`.
//!
//! Elements are carried as `u128` and always kept reduced: bits above `n` are
//! zero. All operations wrap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ring width and fixed-point precision for one computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingConfig {
    /// Bit width of the ring.
    pub n: u32,
    /// Fractional bits of the fixed-point encoding.
    pub d: u32,
}

impl Default for RingConfig {
    fn default() -> Self {
        RingConfig { n: 128, d: 40 }
    }
}

impl RingConfig {
    pub fn new(n: u32, d: u32) -> Result<Self> {
        if n == 0 || n > 128 {
            return Err(Error::Config(format!("ring width {n} outside 1..=128")));
        }
        if d == 0 || d >= n {
            return Err(Error::Config(format!("need 0 < d < n, got d={d}, n={n}")));
        }
        Ok(RingConfig { n, d })
    }

    pub fn ring(&self) -> Ring {
        Ring::new(self.n)
    }

    /// Bytes used to serialize one element.
    pub fn element_bytes(&self) -> usize {
        self.n.div_ceil(8) as usize
    }

    /// Exclusive bound on `|v|` for [`encode_fixed`].
    pub fn encode_limit(&self) -> f64 {
        2f64.powi(self.n as i32 - 1 - self.d as i32)
    }

    pub fn encode(&self, v: f64) -> Result<FixedPoint> {
        encode_fixed(v, *self)
    }

    pub(crate) fn encode_raw(&self, v: f64) -> Result<u128> {
        Ok(encode_fixed(v, *self)?.raw.0)
    }

    pub fn decode_raw(&self, raw: u128) -> f64 {
        self.ring().to_signed(raw) as f64 / 2f64.powi(self.d as i32)
    }

    /// One unit in the last place, `2^-d`.
    pub fn ulp(&self) -> f64 {
        2f64.powi(-(self.d as i32))
    }
}

/// The ring `Z_{2^bits}`. `bits == 1` gives `Z_2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ring {
    bits: u32,
    mask: u128,
}

impl Ring {
    pub const fn new(bits: u32) -> Self {
        let mask = if bits >= 128 { u128::MAX } else { (1u128 << bits) - 1 };
        Ring { bits, mask }
    }

    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn mask(&self) -> u128 {
        self.mask
    }

    #[inline]
    pub fn reduce(&self, a: u128) -> u128 {
        a & self.mask
    }

    #[inline]
    pub fn add(&self, a: u128, b: u128) -> u128 {
        a.wrapping_add(b) & self.mask
    }

    #[inline]
    pub fn sub(&self, a: u128, b: u128) -> u128 {
        a.wrapping_sub(b) & self.mask
    }

    #[inline]
    pub fn neg(&self, a: u128) -> u128 {
        a.wrapping_neg() & self.mask
    }

    #[inline]
    pub fn mul(&self, a: u128, b: u128) -> u128 {
        a.wrapping_mul(b) & self.mask
    }

    /// Two's-complement reading of `a`.
    #[inline]
    pub fn to_signed(&self, a: u128) -> i128 {
        let pad = 128 - self.bits;
        ((a << pad) as i128) >> pad
    }

    #[inline]
    pub fn from_signed(&self, v: i128) -> u128 {
        (v as u128) & self.mask
    }

    /// Sign-extending right shift by `d` bits.
    #[inline]
    pub fn arith_shift_right(&self, a: u128, d: u32) -> u128 {
        debug_assert!(d < self.bits.max(1));
        self.from_signed(self.to_signed(a) >> d)
    }

    /// Local truncation of one additive share: round to nearest multiple of
    /// `2^d`, then shift. Two shares truncated this way reconstruct to within
    /// one unit of the exact quotient unless the shares straddle the wrap
    /// boundary.
    #[inline]
    pub fn truncate_share(&self, a: u128, d: u32) -> u128 {
        if d == 0 {
            return a;
        }
        self.arith_shift_right(self.add(a, 1u128 << (d - 1)), d)
    }

    /// Whether [`Ring::truncate_share`] applied to both shares misses the
    /// quotient of their sum by more than one unit: the rounding offsets
    /// push the shares across the signed boundary.
    pub fn truncation_wraps(&self, a: u128, b: u128, d: u32) -> bool {
        let h = if d == 0 { 0 } else { 1u128 << (d - 1) };
        self.share_sum_wraps(self.add(a, h), self.add(b, h))
    }

    /// Whether two signed shares overflow the signed range when added.
    pub fn share_sum_wraps(&self, a: u128, b: u128) -> bool {
        let (a, b) = (self.to_signed(a), self.to_signed(b));
        match a.checked_add(b) {
            None => true,
            Some(s) => self.to_signed(self.from_signed(s)) != s,
        }
    }

    /// Bit `k` (1-based, `k = 1` is the least significant bit).
    #[inline]
    pub fn bit(&self, a: u128, k: u32) -> u128 {
        (a >> (k - 1)) & 1
    }
}

/// An element of `Z_{2^n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RingValue(pub u128);

impl RingValue {
    pub fn new(value: u128, ring: Ring) -> Self {
        RingValue(ring.reduce(value))
    }

    pub fn add(self, other: RingValue, ring: Ring) -> RingValue {
        RingValue(ring.add(self.0, other.0))
    }

    pub fn sub(self, other: RingValue, ring: Ring) -> RingValue {
        RingValue(ring.sub(self.0, other.0))
    }

    pub fn neg(self, ring: Ring) -> RingValue {
        RingValue(ring.neg(self.0))
    }

    pub fn mul(self, other: RingValue, ring: Ring) -> RingValue {
        RingValue(ring.mul(self.0, other.0))
    }

    pub fn arith_shift_right(self, d: u32, ring: Ring) -> RingValue {
        RingValue(ring.arith_shift_right(self.0, d))
    }

    pub fn signed(self, ring: Ring) -> i128 {
        ring.to_signed(self.0)
    }
}

/// A fixed-point number stored in the ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub raw: RingValue,
    pub config: RingConfig,
}

impl FixedPoint {
    pub fn from_raw(raw: u128, config: RingConfig) -> Self {
        FixedPoint { raw: RingValue::new(raw, config.ring()), config }
    }

    pub fn to_f64(&self) -> f64 {
        decode_fixed(self)
    }
}

/// `floor(v * 2^d) mod 2^n`; fails when `|v| >= 2^(n-1-d)` or `v` is not finite.
pub fn encode_fixed(v: f64, cfg: RingConfig) -> Result<FixedPoint> {
    let limit_bits = cfg.n - 1 - cfg.d;
    if !v.is_finite() || v.abs() >= cfg.encode_limit() {
        return Err(Error::Overflow { value: v, limit_bits });
    }
    // Power-of-two scaling is exact in binary floating point, so the floor is
    // taken on the exact product.
    let scaled = (v * 2f64.powi(cfg.d as i32)).floor();
    let ring = cfg.ring();
    Ok(FixedPoint { raw: RingValue(ring.from_signed(scaled as i128)), config: cfg })
}

pub fn decode_fixed(f: &FixedPoint) -> f64 {
    f.config.decode_raw(f.raw.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r8() -> Ring {
        Ring::new(8)
    }

    #[test]
    fn add_wraps() {
        let r = r8();
        assert_eq!(r.add(200, 100), 44);
        for a in 0..256 {
            assert_eq!(r.add(a, 0), a);
        }
    }

    #[test]
    fn mul_wraps() {
        let r = r8();
        assert_eq!(r.mul(16, 16), 0);
        for a in 0..256 {
            assert_eq!(r.mul(a, 1), a);
        }
    }

    #[test]
    fn group_laws_exhaustive_n8() {
        let r = r8();
        for a in 0..256u128 {
            assert_eq!(r.add(a, r.neg(a)), 0);
            for b in 0..256u128 {
                assert_eq!(r.add(a, b), r.add(b, a));
                assert_eq!(r.sub(r.add(a, b), b), a);
            }
        }
        for a in (0..256u128).step_by(7) {
            for b in (0..256u128).step_by(5) {
                for c in (0..256u128).step_by(3) {
                    assert_eq!(r.add(r.add(a, b), c), r.add(a, r.add(b, c)));
                }
            }
        }
    }

    #[test]
    fn arith_shift_examples() {
        let r = r8();
        assert_eq!(r.arith_shift_right(252, 2), 255);
        for a in 0..256 {
            assert_eq!(r.arith_shift_right(a, 0), a);
        }
    }

    #[test]
    fn arith_shift_exhaustive_n8() {
        let r = r8();
        for a in 0..256u128 {
            let signed = a as u8 as i8;
            for d in 1..8 {
                let expect = ((signed >> d) as u8) as u128;
                assert_eq!(r.arith_shift_right(a, d), expect, "a={a} d={d}");
            }
        }
    }

    #[test]
    fn encode_examples() {
        let cfg = RingConfig::new(8, 4).unwrap();
        assert_eq!(encode_fixed(1.5, cfg).unwrap().raw.0, 24);
        assert_eq!(encode_fixed(-0.25, cfg).unwrap().raw.0, 252);
        assert_eq!(decode_fixed(&FixedPoint::from_raw(24, cfg)), 1.5);
        assert_eq!(decode_fixed(&FixedPoint::from_raw(252, cfg)), -0.25);
    }

    #[test]
    fn encode_floors_toward_negative_infinity() {
        let cfg = RingConfig::new(8, 4).unwrap();
        // -0.01 * 16 = -0.16 -> -1
        assert_eq!(encode_fixed(-0.01, cfg).unwrap().raw.0, 255);
        assert_eq!(encode_fixed(0.01, cfg).unwrap().raw.0, 0);
    }

    #[test]
    fn encode_overflow_is_an_error() {
        let cfg = RingConfig::new(8, 4).unwrap();
        // limit 2^(8-1-4) = 8
        assert!(encode_fixed(7.9, cfg).is_ok());
        assert!(matches!(encode_fixed(8.0, cfg), Err(Error::Overflow { .. })));
        assert!(matches!(encode_fixed(-8.0, cfg), Err(Error::Overflow { .. })));
        assert!(encode_fixed(f64::NAN, cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RingConfig::new(0, 0).is_err());
        assert!(RingConfig::new(129, 4).is_err());
        assert!(RingConfig::new(16, 16).is_err());
        assert!(RingConfig::new(16, 0).is_err());
        assert_eq!(RingConfig::default(), RingConfig::new(128, 40).unwrap());
    }

    #[test]
    fn truncate_share_rounds_to_nearest() {
        let r = Ring::new(16);
        // 23 / 8 = 2.875 -> 3 ; -23 / 8 -> -3 ; 20 / 8 = 2.5 -> 3
        assert_eq!(r.to_signed(r.truncate_share(23, 3)), 3);
        assert_eq!(r.to_signed(r.truncate_share(r.from_signed(-23), 3)), -3);
        assert_eq!(r.to_signed(r.truncate_share(20, 3)), 3);
    }

    proptest! {
        #[test]
        fn shift_of_scaled_value_recovers_it(v in -1.0e6f64..1.0e6) {
            let cfg = RingConfig::default();
            let ring = cfg.ring();
            // encode(v * 2^d) then shift by d gives back encode(v) up to one ulp
            let big = encode_fixed(v * 2f64.powi(cfg.d as i32), RingConfig::new(128, 40).unwrap());
            if let Ok(big) = big {
                let shifted = ring.arith_shift_right(big.raw.0, cfg.d);
                let got = cfg.decode_raw(shifted);
                prop_assert!((got - v).abs() <= cfg.ulp());
            }
        }

        #[test]
        fn signed_round_trip(v in any::<i64>()) {
            let r = Ring::new(128);
            prop_assert_eq!(r.to_signed(r.from_signed(v as i128)), v as i128);
        }

        #[test]
        fn truncation_wraps_is_exact(a in 0u128..1 << 16, v in -4096i128..4096) {
            let r = Ring::new(16);
            let b = r.sub(r.from_signed(v), a);
            let got = r.to_signed(r.add(r.truncate_share(a, 4), r.truncate_share(b, 4)));
            let off = (got as f64 - v as f64 / 16.0).abs() > 1.0;
            prop_assert_eq!(off, r.truncation_wraps(a, b, 4));
        }
    }
}
