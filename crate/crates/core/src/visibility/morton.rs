use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3};

pub const DEFAULT_BITS_PER_AXIS: u32 = 21;

/// Spreads the low 21 bits of `v` so that bit `i` lands on bit `3 * i`.
fn spread_bits(v: u64) -> u64 {
    let mut x = v & 0x1f_ffff;
    x = (x | (x << 32)) & 0x001f_0000_0000_ffff;
    x = (x | (x << 16)) & 0x001f_0000_ff00_00ff;
    x = (x | (x << 8)) & 0x100f_00f0_0f00_f00f;
    x = (x | (x << 4)) & 0x10c3_0c30_c30c_30c3;
    x = (x | (x << 2)) & 0x1249_2492_4924_9249;
    x
}

fn quantize(value: f64, lo: f64, hi: f64, max_cell: u64) -> u64 {
    let extent = hi - lo;
    if !(extent > 0.0) {
        return 0;
    }
    let t = ((value - lo) / extent).clamp(0.0, 1.0);
    ((t * max_cell as f64).floor() as u64).min(max_cell)
}

/// Interleaves already-quantized coordinates: x on bit 0, y on bit 1, z on bit 2, and so on upwards.
pub fn interleave(x: u64, y: u64, z: u64) -> u64 {
    spread_bits(x) | (spread_bits(y) << 1) | (spread_bits(z) << 2)
}

/// Morton code of `point` relative to `bbox`, `bits_per_axis` bits per axis.
/// Points outside the box are clamped onto it.
pub fn morton_code(point: Point3, bbox: &Aabb, bits_per_axis: u32) -> Result<u64> {
    if !(1..=21).contains(&bits_per_axis) {
        return Err(Error::param("bits_per_axis", format!("{bits_per_axis} not in 1..=21")));
    }
    let max_cell = (1u64 << bits_per_axis) - 1;
    let q = |i: usize| quantize(point.axis(i), bbox.min.axis(i), bbox.max.axis(i), max_cell);
    Ok(interleave(q(0), q(1), q(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_box() -> Aabb {
        Aabb {
            min: Point3::ZERO,
            max: Point3::new(1.0, 1.0, 1.0),
        }
    }

    /// Bit-by-bit reference interleave.
    fn naive_interleave(x: u64, y: u64, z: u64, bits: u32) -> u64 {
        (0..bits).fold(0, |acc, i| {
            acc | (((x >> i) & 1) << (3 * i))
                | (((y >> i) & 1) << (3 * i + 1))
                | (((z >> i) & 1) << (3 * i + 2))
        })
    }

    #[test]
    fn corners() {
        let b = unit_box();
        assert_eq!(morton_code(b.min, &b, 21).unwrap(), 0);
        assert_eq!(morton_code(b.max, &b, 21).unwrap(), (1u64 << 63) - 1);
        assert_eq!(morton_code(b.max, &b, 2).unwrap(), 0b111111);
    }

    #[test]
    fn two_bit_interleave_order() {
        // bits=2: quantized coordinate = floor(t * 3)
        let b = unit_box();
        let q = |x: f64, y: f64, z: f64| morton_code(Point3::new(x, y, z), &b, 2).unwrap();
        assert_eq!(q(0.34, 0.0, 0.0), 1);
        assert_eq!(q(0.0, 0.34, 0.0), 2);
        assert_eq!(q(0.0, 0.0, 0.34), 4);
        assert_eq!(interleave(1, 0, 0), 0b000001);
        assert_eq!(interleave(2, 0, 0), 0b001000);
    }

    #[test]
    fn bits_out_of_range() {
        let b = unit_box();
        assert!(morton_code(b.min, &b, 0).is_err());
        assert!(morton_code(b.min, &b, 22).is_err());
    }

    #[test]
    fn outside_points_are_clamped() {
        let b = unit_box();
        assert_eq!(morton_code(Point3::new(-5.0, -1.0, -2.0), &b, 10).unwrap(), 0);
        assert_eq!(
            morton_code(Point3::new(5.0, 1.0, 2.0), &b, 10).unwrap(),
            morton_code(b.max, &b, 10).unwrap()
        );
    }

    proptest! {
        #[test]
        fn interleave_matches_naive(x in 0u64..(1 << 21), y in 0u64..(1 << 21), z in 0u64..(1 << 21)) {
            prop_assert_eq!(interleave(x, y, z), naive_interleave(x, y, z, 21));
        }

        #[test]
        fn monotone_along_each_axis(a in 0.0f64..1.0, b in 0.0f64..1.0, lo in 0.0f64..1.0, hi in 0.0f64..1.0, axis in 0usize..3) {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let make = |t: f64| match axis {
                0 => Point3::new(t, a, b),
                1 => Point3::new(a, t, b),
                _ => Point3::new(a, b, t),
            };
            let bx = unit_box();
            prop_assert!(morton_code(make(lo), &bx, 21).unwrap() <= morton_code(make(hi), &bx, 21).unwrap());
        }
    }
}
