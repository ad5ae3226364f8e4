use super::tables::{ANNEX_K_CHROMA, ANNEX_K_LUMA};

/// Percentage scale applied to the base tables for a quality setting.
/// Quality 0 is treated as 1.
pub fn quality_scale(quality: u8) -> u32 {
    let q = quality.clamp(1, 100) as u32;
    if q < 50 {
        5000 / q
    } else {
        200 - 2 * q
    }
}

/// Scales a base table: `clamp((base * scale + 50) / 100, 1, 255)`.
pub fn scale_table(base: &[u8; 64], quality: u8) -> [u8; 64] {
    let scale = quality_scale(quality);
    base.map(|b| ((b as u32 * scale + 50) / 100).clamp(1, 255) as u8)
}

/// Luma and chroma tables for one quality setting, natural order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantTables {
    pub luma: [u8; 64],
    pub chroma: [u8; 64],
}

impl QuantTables {
    pub fn for_quality(quality: u8) -> Self {
        QuantTables {
            luma: scale_table(&ANNEX_K_LUMA, quality),
            chroma: scale_table(&ANNEX_K_CHROMA, quality),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quality_50_is_the_base_table() {
        assert_eq!(quality_scale(50), 100);
        let t = QuantTables::for_quality(50);
        assert_eq!(t.luma, ANNEX_K_LUMA);
        assert_eq!(t.chroma, ANNEX_K_CHROMA);
    }

    #[test]
    fn quality_100_is_all_ones() {
        assert_eq!(quality_scale(100), 0);
        let t = QuantTables::for_quality(100);
        assert!(t.luma.iter().chain(&t.chroma).all(|&v| v == 1));
    }

    #[test]
    fn quality_zero_behaves_like_one() {
        assert_eq!(quality_scale(0), 5000);
        assert_eq!(QuantTables::for_quality(0), QuantTables::for_quality(1));
        assert!(QuantTables::for_quality(1).luma.iter().all(|&v| v == 255));
    }

    #[test]
    fn known_scaled_entries() {
        // q=10: scale 500, 16*500/100 = 80; q=75: scale 50, 16*50/100 = 8
        assert_eq!(QuantTables::for_quality(10).luma[0], 80);
        assert_eq!(QuantTables::for_quality(75).luma[0], 8);
        // 11*50 + 50 = 600 -> 6
        assert_eq!(QuantTables::for_quality(75).luma[1], 6);
    }

    #[test]
    fn coarser_tables_at_lower_quality() {
        for q in 1..100u8 {
            let lo = QuantTables::for_quality(q);
            let hi = QuantTables::for_quality(q + 1);
            assert!(lo.luma.iter().zip(&hi.luma).all(|(a, b)| a >= b));
        }
    }
}
