//! Normal map encoding: `rgb = (n + 1) / 2`.

use crate::Vec3;

/// Background color written where the mask is empty.
pub const BACKGROUND: Vec3 = Vec3::new(0.5, 0.5, 0.5);

/// Decoded vectors shorter than this are treated as background.
const MIN_DECODED_NORM: f64 = 0.5;

pub fn encode_normal(n: &Vec3) -> Vec3 {
    (n + Vec3::repeat(1.0)) * 0.5
}

/// Inverts [`encode_normal`] and renormalizes. Returns `None` for the
/// background color (and anything that decodes to a near-zero vector).
pub fn decode_normal(c: &Vec3) -> Option<Vec3> {
    let n = c * 2.0 - Vec3::repeat(1.0);
    let len = n.norm();
    (len >= MIN_DECODED_NORM).then(|| n / len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn formula_cases() {
        assert_eq!(encode_normal(&Vec3::z()), Vec3::new(0.5, 0.5, 1.0));
        assert_eq!(decode_normal(&Vec3::new(1.0, 0.5, 0.5)), Some(Vec3::x()));
        assert_eq!(decode_normal(&BACKGROUND), None);
        // 8-bit quantized background: 128/255 per channel.
        assert_eq!(decode_normal(&Vec3::repeat(128.0 / 255.0)), None);
    }

    #[test]
    fn eight_bit_roundtrip_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let n = loop {
                let v = Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                if v.norm() > 0.1 && v.norm() <= 1.0 {
                    break v.normalize();
                }
            };
            let q = encode_normal(&n).map(|c| (c * 255.0).round() / 255.0);
            let back = decode_normal(&q).unwrap();
            assert!((back - n).amax() <= 1.0 / 255.0 * 2.0);
            worst = worst.max(back.dot(&n).clamp(-1.0, 1.0).acos().to_degrees());
        }
        assert!(worst <= 0.6, "worst angular error {worst}");
    }
}
