//! Inbound and outbound process configuration: arrival generation,
//! wave/order generation, and the bookkeeping inventory that keeps order
//! draws identical across compared scenarios.

use std::collections::VecDeque;

use crate::error::ConfigError;
use crate::model::{
    draw_sku_class, Order, OrderId, OrderLine, Pallet, PalletFormat, PalletId, SkuCatalog,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

/// Inbound demand shape. The log-normal location parameter is derived from
/// the daily volume target so that mean gap x daily volume = day length
/// exactly; sigma is the underlying normal's standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InboundConfig {
    pub interarrival_sigma: f64,
    pub daily_volume_target: f64,
    pub truck_count: u32,
}

impl Default for InboundConfig {
    fn default() -> Self {
        InboundConfig {
            interarrival_sigma: 0.6,
            daily_volume_target: 2050.0,
            truck_count: 10,
        }
    }
}

impl InboundConfig {
    pub fn mean_gap_s(&self, day_length_s: f64) -> f64 {
        day_length_s / self.daily_volume_target
    }

    /// Location of the underlying normal: ln(mean) - sigma^2 / 2.
    pub fn mu(&self, day_length_s: f64) -> f64 {
        self.mean_gap_s(day_length_s).ln() - self.interarrival_sigma.powi(2) / 2.0
    }

    pub fn validate(&self, key: &str, day_length_s: f64) -> Result<(), ConfigError> {
        if !(self.daily_volume_target > 0.0) {
            return Err(ConfigError::invalid(
                format!("{key}.daily_volume_target"),
                "daily volume must be positive",
            ));
        }
        if self.interarrival_sigma < 0.0 {
            return Err(ConfigError::invalid(
                format!("{key}.interarrival_sigma"),
                "sigma must be nonnegative",
            ));
        }
        if self.truck_count == 0 {
            return Err(ConfigError::invalid(
                format!("{key}.truck_count"),
                "at least one inbound truck is required",
            ));
        }
        let product = self.mean_gap_s(day_length_s) * self.daily_volume_target;
        if (product - day_length_s).abs() / day_length_s > 0.05 {
            return Err(ConfigError::invalid(
                key.to_string(),
                "mean interarrival x daily volume must match the day length within 5%",
            ));
        }
        Ok(())
    }
}

/// Outbound demand shape: takt-timed waves of multi-SKU orders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutboundConfig {
    pub takt_s: f64,
    pub skus_per_order: u32,
    /// Pallets per line ~ Normal(mean, sd), truncated at 1, rounded.
    pub line_quantity_mean: f64,
    pub line_quantity_sd: f64,
    pub truck_count: u32,
    /// Scales drawn line quantities; >1 injects a demand spike.
    pub demand_multiplier: f64,
    /// Arrivals enter the order book only after this maturation lag, so
    /// waves never order pallets that cannot be stored in time.
    pub book_lead_s: f64,
}

impl Default for OutboundConfig {
    fn default() -> Self {
        OutboundConfig {
            takt_s: 1500.0,
            skus_per_order: 8,
            line_quantity_mean: 6.7,
            line_quantity_sd: 1.8,
            truck_count: 10,
            demand_multiplier: 1.0,
            book_lead_s: 1800.0,
        }
    }
}

impl OutboundConfig {
    pub fn validate(&self, key: &str) -> Result<(), ConfigError> {
        if !(self.takt_s > 0.0) {
            return Err(ConfigError::invalid(
                format!("{key}.takt_s"),
                "takt must be positive",
            ));
        }
        if self.skus_per_order == 0 {
            return Err(ConfigError::invalid(
                format!("{key}.skus_per_order"),
                "orders need at least one SKU",
            ));
        }
        if self.line_quantity_sd < 0.0 || !(self.line_quantity_mean >= 1.0) {
            return Err(ConfigError::invalid(
                format!("{key}.line_quantity_mean"),
                "line quantity mean must be >= 1 and sd nonnegative",
            ));
        }
        if self.truck_count == 0 {
            return Err(ConfigError::invalid(
                format!("{key}.truck_count"),
                "at least one outbound truck is required",
            ));
        }
        if !(self.demand_multiplier > 0.0) {
            return Err(ConfigError::invalid(
                format!("{key}.demand_multiplier"),
                "demand multiplier must be positive",
            ));
        }
        if self.book_lead_s < 0.0 {
            return Err(ConfigError::invalid(
                format!("{key}.book_lead_s"),
                "book lead must be nonnegative",
            ));
        }
        Ok(())
    }
}

/// Pallet-mix parameters shared by arrivals and pre-fill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PalletMix {
    /// Probability of each collar count 1..=6.
    pub collar_weights: [f64; 6],
    pub euro_full_share: f64,
}

impl Default for PalletMix {
    fn default() -> Self {
        PalletMix {
            collar_weights: [1.0 / 6.0; 6],
            euro_full_share: 0.7,
        }
    }
}

impl PalletMix {
    pub fn validate(&self, key: &str) -> Result<(), ConfigError> {
        if self.collar_weights.iter().any(|w| *w < 0.0) {
            return Err(ConfigError::invalid(
                format!("{key}.collar_weights"),
                "collar weights must be nonnegative",
            ));
        }
        let sum: f64 = self.collar_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::invalid(
                format!("{key}.collar_weights"),
                format!("collar weights sum to {sum}, expected 1"),
            ));
        }
        if !(0.0..=1.0).contains(&self.euro_full_share) {
            return Err(ConfigError::invalid(
                format!("{key}.euro_full_share"),
                "euro_full_share must lie in [0, 1]",
            ));
        }
        Ok(())
    }

    pub fn draw_collars<R: Rng>(&self, rng: &mut R) -> u8 {
        let u: f64 = rng.gen_range(0.0..1.0);
        let mut acc = 0.0;
        for (i, w) in self.collar_weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return (i + 1) as u8;
            }
        }
        6
    }

    pub fn draw_format<R: Rng>(&self, rng: &mut R) -> PalletFormat {
        if rng.gen_range(0.0..1.0) < self.euro_full_share {
            PalletFormat::EuroFull
        } else {
            PalletFormat::EuroHalf
        }
    }
}

/// Draws one pallet's identity (class, SKU, collars, format) from the
/// composition streams. Shared by the arrival process and pre-fill so both
/// follow the same mix.
pub struct PalletComposer {
    pub classes: ChaCha8Rng,
    pub collars: ChaCha8Rng,
    pub formats: ChaCha8Rng,
}

impl PalletComposer {
    pub fn compose(
        &mut self,
        id: PalletId,
        arrival_time: f64,
        catalog: &SkuCatalog,
        mix: &PalletMix,
    ) -> Pallet {
        let u: f64 = self.classes.gen_range(0.0..1.0);
        let class = draw_sku_class(u, &catalog.class_split).expect("u in [0,1)");
        let sku = catalog.draw_sku_in_class(class, &mut self.classes);
        Pallet {
            id,
            sku,
            sku_class: class,
            format: mix.draw_format(&mut self.formats),
            collars: mix.draw_collars(&mut self.collars),
            arrival_time,
            stored_time: None,
            slot: None,
        }
    }
}

/// Log-normal arrival stream. Each call advances the clock by one gap and
/// composes the next pallet.
pub struct ArrivalGenerator {
    gaps: ChaCha8Rng,
    composer: PalletComposer,
    dist: LogNormal<f64>,
    mix: PalletMix,
    next_time: f64,
    next_id: PalletId,
}

impl ArrivalGenerator {
    pub fn new(
        cfg: &InboundConfig,
        mix: PalletMix,
        day_length_s: f64,
        gaps: ChaCha8Rng,
        composer: PalletComposer,
        first_id: PalletId,
    ) -> Self {
        let dist = LogNormal::new(cfg.mu(day_length_s), cfg.interarrival_sigma)
            .expect("valid log-normal parameters");
        ArrivalGenerator {
            gaps,
            composer,
            dist,
            mix,
            next_time: 0.0,
            next_id: first_id,
        }
    }

    pub fn next_arrival(&mut self, catalog: &SkuCatalog) -> (f64, Pallet) {
        let gap = self.dist.sample(&mut self.gaps);
        self.next_time += gap;
        let pallet = self
            .composer
            .compose(self.next_id, self.next_time, catalog, &self.mix);
        self.next_id += 1;
        (self.next_time, pallet)
    }

    /// Continue pallet ids after externally created pallets (pre-fill).
    pub fn set_next_id(&mut self, id: PalletId) {
        self.next_id = id;
    }
}

/// Load consolidation: the first pending putaway fixes the trip's direction
/// band (a third of the x-axis); later putaways join in queue order while
/// they share that band and fit the collar capacity. Returns the chosen
/// indices.
pub fn consolidate_batch(items: &[(u8, u8)], capacity_collar_units: u32) -> Vec<usize> {
    let mut chosen = Vec::new();
    let mut used = 0u32;
    let mut band = None;
    for (i, (collars, item_band)) in items.iter().enumerate() {
        let collars = *collars as u32;
        match band {
            None => {
                band = Some(*item_band);
                used = collars;
                chosen.push(i);
            }
            Some(b) => {
                if *item_band == b && used + collars <= capacity_collar_units {
                    used += collars;
                    chosen.push(i);
                }
            }
        }
    }
    chosen
}

/// Generate the full arrival stream up to `horizon_s`.
pub fn generate_arrivals(
    cfg: &InboundConfig,
    mix: &PalletMix,
    catalog: &SkuCatalog,
    day_length_s: f64,
    horizon_s: f64,
    gaps: ChaCha8Rng,
    composer: PalletComposer,
) -> Vec<(f64, Pallet)> {
    let mut generator = ArrivalGenerator::new(cfg, mix.clone(), day_length_s, gaps, composer, 0);
    let mut out = Vec::new();
    loop {
        let (t, pallet) = generator.next_arrival(catalog);
        if t >= horizon_s {
            return out;
        }
        out.push((t, pallet));
    }
}

/// Book inventory: per-SKU counts of pallets that are on site (pre-filled,
/// or arrived at least `book_lead_s` ago) and not yet allocated to an
/// order. It depends only on the common-random-number arrival stream and
/// past orders, so it is identical across compared scenarios.
#[derive(Debug, Clone)]
pub struct Book {
    available: Vec<u32>,
    maturing: VecDeque<(f64, u32)>,
}

impl Book {
    pub fn new(n_skus: usize) -> Self {
        Book {
            available: vec![0; n_skus],
            maturing: VecDeque::new(),
        }
    }

    /// Pre-filled stock is available immediately.
    pub fn add_initial(&mut self, sku: u32) {
        self.available[sku as usize] += 1;
    }

    /// An arrival matures into the book at `arrival + lead`.
    pub fn register_arrival(&mut self, arrival_s: f64, sku: u32, lead_s: f64) {
        self.maturing.push_back((arrival_s + lead_s, sku));
    }

    /// Fold matured arrivals into the availability counts.
    pub fn mature(&mut self, now_s: f64) {
        while let Some((t, sku)) = self.maturing.front().copied() {
            if t > now_s {
                break;
            }
            self.maturing.pop_front();
            self.available[sku as usize] += 1;
        }
    }

    pub fn available(&self, sku: u32) -> u32 {
        self.available[sku as usize]
    }

    pub fn allocate(&mut self, sku: u32, qty: u32) {
        debug_assert!(self.available[sku as usize] >= qty);
        self.available[sku as usize] -= qty;
    }

    pub fn total_available(&self) -> u64 {
        self.available.iter().map(|&c| c as u64).sum()
    }
}

/// Wave/order generator: SKUs drawn by demand weight without replacement
/// among book-available SKUs; quantities from a truncated normal clamped to
/// book availability.
pub struct WaveGenerator {
    skus: ChaCha8Rng,
    sizes: ChaCha8Rng,
    quantity: Normal<f64>,
}

impl WaveGenerator {
    pub fn new(cfg: &OutboundConfig, skus: ChaCha8Rng, sizes: ChaCha8Rng) -> Self {
        WaveGenerator {
            skus,
            sizes,
            quantity: Normal::new(cfg.line_quantity_mean, cfg.line_quantity_sd)
                .expect("valid normal parameters"),
        }
    }

    /// Generate the order of wave `wave_index`, allocating from `book`.
    /// Returns `None` when nothing is available at all.
    pub fn generate_wave(
        &mut self,
        cfg: &OutboundConfig,
        catalog: &SkuCatalog,
        book: &mut Book,
        order_id: OrderId,
        wave_index: u64,
    ) -> Option<Order> {
        let release_time = wave_index as f64 * cfg.takt_s;
        book.mature(release_time);
        let mut candidates: Vec<(u32, f64)> = catalog
            .skus
            .iter()
            .filter(|s| book.available(s.id) > 0)
            .map(|s| (s.id, s.demand_weight))
            .collect();
        let mut lines = Vec::new();
        for _ in 0..cfg.skus_per_order {
            if candidates.is_empty() {
                break;
            }
            let total: f64 = candidates.iter().map(|(_, w)| w).sum();
            let mut u = self.skus.gen_range(0.0..total);
            let mut idx = candidates.len() - 1;
            for (i, (_, w)) in candidates.iter().enumerate() {
                if u < *w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            let (sku, _) = candidates.remove(idx);
            let raw = self.quantity.sample(&mut self.sizes) * cfg.demand_multiplier;
            let qty = (raw.round().max(1.0) as u32).min(book.available(sku)).max(1);
            book.allocate(sku, qty);
            lines.push(OrderLine { sku, quantity: qty });
        }
        if lines.is_empty() {
            return None;
        }
        Some(Order {
            id: order_id,
            wave_index,
            release_time,
            lines,
            completion_time: None,
        })
    }
}
