//! Domain types and elementary classification functions shared by all
//! other modules: pallets, orders, and the SKU catalog.

use crate::error::ConfigError;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub type PalletId = u64;
pub type SkuId = u32;
pub type OrderId = u64;

/// Height added per collar, in millimeters.
pub const COLLAR_HEIGHT_MM: u32 = 200;
pub const MIN_COLLARS: u8 = 1;
pub const MAX_COLLARS: u8 = 6;

/// Demand-frequency class of a SKU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SkuClass {
    A,
    B,
    C,
}

impl SkuClass {
    pub const ALL: [SkuClass; 3] = [SkuClass::A, SkuClass::B, SkuClass::C];

    pub fn letter(self) -> char {
        match self {
            SkuClass::A => 'A',
            SkuClass::B => 'B',
            SkuClass::C => 'C',
        }
    }
}

/// Load-unit footprint format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PalletFormat {
    EuroFull,
    EuroHalf,
}

impl PalletFormat {
    /// Footprint as (length mm, width mm).
    pub fn footprint_mm(self) -> (u32, u32) {
        match self {
            PalletFormat::EuroFull => (1200, 800),
            PalletFormat::EuroHalf => (800, 600),
        }
    }
}

/// One physical pallet moving through the warehouse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pallet {
    pub id: PalletId,
    pub sku: SkuId,
    pub sku_class: SkuClass,
    pub format: PalletFormat,
    /// Collar count, 1..=6. Height is `collars * 200` mm.
    pub collars: u8,
    pub arrival_time: f64,
    pub stored_time: Option<f64>,
    pub slot: Option<u32>,
}

impl Pallet {
    pub fn height_mm(&self) -> u32 {
        self.collars as u32 * COLLAR_HEIGHT_MM
    }
}

/// Pallet height from its collar count.
///
/// Errors on a collar count outside 1..=6.
pub fn pallet_height(collars: u8) -> Result<u32, ConfigError> {
    if !(MIN_COLLARS..=MAX_COLLARS).contains(&collars) {
        return Err(ConfigError::invalid(
            "collars",
            format!("collar count {collars} outside 1..=6"),
        ));
    }
    Ok(collars as u32 * COLLAR_HEIGHT_MM)
}

/// Three class fractions that must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSplit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ClassSplit {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        ClassSplit { a, b, c }
    }

    pub fn validate(&self, key: &str) -> Result<(), ConfigError> {
        if self.a < 0.0 || self.b < 0.0 || self.c < 0.0 {
            return Err(ConfigError::invalid(key, "fractions must be nonnegative"));
        }
        let sum = self.a + self.b + self.c;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::invalid(
                key,
                format!("fractions sum to {sum}, expected 1"),
            ));
        }
        Ok(())
    }

    pub fn of(&self, class: SkuClass) -> f64 {
        match class {
            SkuClass::A => self.a,
            SkuClass::B => self.b,
            SkuClass::C => self.c,
        }
    }
}

/// Default demand split: A-pallets are 80% of flow, B 15%, C 5%.
pub const DEFAULT_VOLUME_SPLIT: ClassSplit = ClassSplit::new(0.80, 0.15, 0.05);
/// Default share of the SKU list per class: A-items are 20% of SKUs.
pub const DEFAULT_SKU_SHARE: ClassSplit = ClassSplit::new(0.20, 0.30, 0.50);

/// Map a uniform sample in [0,1) to a class under `split`.
pub fn draw_sku_class(u: f64, split: &ClassSplit) -> Result<SkuClass, ConfigError> {
    if !(0.0..1.0).contains(&u) {
        return Err(ConfigError::invalid(
            "u",
            format!("uniform sample {u} outside [0,1)"),
        ));
    }
    if u < split.a {
        Ok(SkuClass::A)
    } else if u < split.a + split.b {
        Ok(SkuClass::B)
    } else {
        Ok(SkuClass::C)
    }
}

/// One SKU entry: class plus demand weight (all weights sum to 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkuEntry {
    pub id: SkuId,
    pub class: SkuClass,
    pub demand_weight: f64,
}

/// The SKU population with its class structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkuCatalog {
    pub skus: Vec<SkuEntry>,
    /// Demand-volume split used when classifying arriving pallets.
    pub class_split: ClassSplit,
}

impl SkuCatalog {
    pub fn len(&self) -> usize {
        self.skus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skus.is_empty()
    }

    pub fn class_of(&self, sku: SkuId) -> SkuClass {
        self.skus[sku as usize].class
    }

    pub fn sku_ids_of_class(&self, class: SkuClass) -> Vec<SkuId> {
        self.skus
            .iter()
            .filter(|s| s.class == class)
            .map(|s| s.id)
            .collect()
    }

    /// Draw a SKU uniformly within `class`. The class itself carries the
    /// demand weighting, so per-SKU weights within a class are equal.
    pub fn draw_sku_in_class<R: Rng>(&self, class: SkuClass, rng: &mut R) -> SkuId {
        let ids = self.class_ranges();
        let (start, count) = ids[class as usize];
        start + rng.gen_range(0..count)
    }

    /// SKUs are laid out contiguously by class: A first, then B, then C.
    fn class_ranges(&self) -> [(SkuId, SkuId); 3] {
        let mut ranges = [(0, 0); 3];
        let mut start = 0u32;
        for (i, class) in SkuClass::ALL.iter().enumerate() {
            let count = self.skus.iter().filter(|s| s.class == *class).count() as u32;
            ranges[i] = (start, count);
            start += count;
        }
        ranges
    }
}

/// Build a catalog of `n_skus` SKUs.
///
/// Class sizes are `ceil(n * share)` for A, then B, with C taking the
/// remainder; per-SKU demand weights are equal within a class and total
/// `demand_share_of_volume` per class.
pub fn build_catalog(
    n_skus: u32,
    class_share_of_skus: &ClassSplit,
    demand_share_of_volume: &ClassSplit,
    ) -> Result<SkuCatalog, ConfigError> {
    class_share_of_skus.validate("class_share_of_skus")?;
    demand_share_of_volume.validate("demand_share_of_volume")?;
    if n_skus < 3 {
        return Err(ConfigError::invalid(
            "n_skus",
            format!("need at least 3 SKUs, got {n_skus}"),
        ));
    }
    let n = n_skus as f64;
    let n_a = (n * class_share_of_skus.a).ceil() as u32;
    let n_b = ((n * class_share_of_skus.b).ceil() as u32).min(n_skus - n_a);
    let n_c = n_skus - n_a - n_b;
    let counts = [n_a, n_b, n_c];
    for (class, &count) in SkuClass::ALL.iter().zip(&counts) {
        if count == 0 && demand_share_of_volume.of(*class) > 0.0 {
            return Err(ConfigError::invalid(
                "class_share_of_skus",
                format!(
                    "class {} has zero SKUs but demand share {}",
                    class.letter(),
                    demand_share_of_volume.of(*class)
                ),
            ));
        }
    }
    let mut skus = Vec::with_capacity(n_skus as usize);
    let mut id: SkuId = 0;
    for (class, &count) in SkuClass::ALL.iter().zip(&counts) {
        let weight = if count == 0 {
            0.0
        } else {
            demand_share_of_volume.of(*class) / count as f64
        };
        for _ in 0..count {
            skus.push(SkuEntry {
                id,
                class: *class,
                demand_weight: weight,
            });
            id += 1;
        }
    }
    Ok(SkuCatalog {
        skus,
        class_split: *demand_share_of_volume,
    })
}

/// One outbound order line: a SKU and how many pallets of it are required.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderLine {
    pub sku: SkuId,
    pub quantity: u32,
}

/// An outbound order released by a takt wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub wave_index: u64,
    pub release_time: f64,
    pub lines: Vec<OrderLine>,
    pub completion_time: Option<f64>,
}

impl Order {
    pub fn total_pallets(&self) -> u32 {
        self.lines.iter().map(|l| l.quantity).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pallet_height_range() {
        assert_eq!(pallet_height(1).unwrap(), 200);
        assert_eq!(pallet_height(6).unwrap(), 1200);
        assert!(pallet_height(0).is_err());
        assert!(pallet_height(7).is_err());
    }

    #[test]
    fn pallet_height_strictly_monotone() {
        let mut prev = 0;
        for c in 1..=6 {
            let h = pallet_height(c).unwrap();
            assert!(h > prev);
            prev = h;
        }
    }

    #[test]
    fn format_footprints_exact() {
        assert_eq!(PalletFormat::EuroFull.footprint_mm(), (1200, 800));
        assert_eq!(PalletFormat::EuroHalf.footprint_mm(), (800, 600));
    }

    #[test]
    fn class_draw_boundaries() {
        let split = ClassSplit::new(0.80, 0.15, 0.05);
        assert_eq!(draw_sku_class(0.0, &split).unwrap(), SkuClass::A);
        assert_eq!(draw_sku_class(0.90, &split).unwrap(), SkuClass::B);
        assert_eq!(draw_sku_class(0.99, &split).unwrap(), SkuClass::C);
        assert!(draw_sku_class(1.0, &split).is_err());
        assert!(draw_sku_class(-0.1, &split).is_err());
    }

    #[test]
    fn class_draw_empirical_frequencies() {
        // 10^6 draws must land within +-0.5 percentage points of 80/15/5.
        let split = ClassSplit::new(0.80, 0.15, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0u64; 3];
        let n = 1_000_000;
        for _ in 0..n {
            let u: f64 = rng.gen_range(0.0..1.0);
            counts[draw_sku_class(u, &split).unwrap() as usize] += 1;
        }
        let freq = |i: usize| counts[i] as f64 / n as f64;
        assert!((freq(0) - 0.80).abs() < 0.005);
        assert!((freq(1) - 0.15).abs() < 0.005);
        assert!((freq(2) - 0.05).abs() < 0.005);
    }

    #[test]
    fn catalog_pareto_shape() {
        let cat = build_catalog(
            100,
            &ClassSplit::new(0.20, 0.30, 0.50),
            &ClassSplit::new(0.80, 0.15, 0.05),
        )
        .unwrap();
        let a: Vec<_> = cat.skus.iter().filter(|s| s.class == SkuClass::A).collect();
        assert_eq!(a.len(), 20);
        let a_weight: f64 = a.iter().map(|s| s.demand_weight).sum();
        assert!((a_weight - 0.80).abs() < 1e-9);
    }

    #[test]
    fn catalog_symmetric_weights_equal() {
        let third = 1.0 / 3.0;
        let cat = build_catalog(
            3,
            &ClassSplit::new(third, third, third),
            &ClassSplit::new(third, third, third),
        )
        .unwrap();
        let w0 = cat.skus[0].demand_weight;
        assert!(cat.skus.iter().all(|s| (s.demand_weight - w0).abs() < 1e-12));
    }

    #[test]
    fn catalog_weights_sum_to_one() {
        // Direct-summation oracle over a few shapes.
        for n in [3u32, 17, 120, 999] {
            let cat = build_catalog(n, &DEFAULT_SKU_SHARE, &DEFAULT_VOLUME_SPLIT).unwrap();
            let total: f64 = cat.skus.iter().map(|s| s.demand_weight).sum();
            assert!((total - 1.0).abs() < 1e-9, "n={n} total={total}");
        }
    }

    #[test]
    fn catalog_rejects_empty_class_with_demand() {
        let err = build_catalog(
            3,
            &ClassSplit::new(1.0, 0.0, 0.0),
            &ClassSplit::new(0.80, 0.15, 0.05),
        );
        assert!(err.is_err());
    }

    #[test]
    fn sku_draw_stays_in_class() {
        let cat = build_catalog(120, &DEFAULT_SKU_SHARE, &DEFAULT_VOLUME_SPLIT).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for class in SkuClass::ALL {
            for _ in 0..200 {
                let sku = cat.draw_sku_in_class(class, &mut rng);
                assert_eq!(cat.class_of(sku), class);
            }
        }
    }
}
