//! Scenario configuration: the TOML schema, defaults, validation, and the
//! comparison-bundle format.

use std::path::Path;

use crate::engine::ReplicationPlan;
use crate::error::ConfigError;
use crate::layout::{
    build_conventional, build_cpu, build_flying_v, Layout, LayoutKind, LayoutSpec,
};
use crate::model::{build_catalog, ClassSplit, SkuCatalog, DEFAULT_SKU_SHARE, DEFAULT_VOLUME_SPLIT};
use crate::process::{InboundConfig, OutboundConfig, PalletMix};
use crate::routing::VehicleProfile;
use crate::slotting::{PolicyKind, PolicyParams};
use serde::{Deserialize, Serialize};

/// Layout choice: a generator kind plus geometry overrides applied on top
/// of that kind's default spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutChoice {
    pub kind: LayoutKind,
    /// Keys of `LayoutSpec` to override; everything else takes the kind's
    /// documented default.
    pub overrides: toml::Table,
}

impl Default for LayoutChoice {
    fn default() -> Self {
        LayoutChoice {
            kind: LayoutKind::Conventional,
            overrides: toml::Table::new(),
        }
    }
}

/// The legacy warehouse: wider aisles, three levels, more rows — the
/// conventional generator with its own dimensions.
pub fn current_layout_spec() -> LayoutSpec {
    LayoutSpec {
        aisle_width_mm: 4500,
        rows: 24,
        bays_per_row: 40,
        levels: 3,
        target_slot_count: 5500,
        ..LayoutSpec::default()
    }
}

impl LayoutChoice {
    pub fn default_spec(kind: LayoutKind) -> LayoutSpec {
        match kind {
            LayoutKind::Current => current_layout_spec(),
            _ => LayoutSpec::default(),
        }
    }

    /// The kind's default spec with this choice's overrides merged in.
    pub fn resolved_spec(&self) -> Result<LayoutSpec, ConfigError> {
        let base = Self::default_spec(self.kind);
        if self.overrides.is_empty() {
            return Ok(base);
        }
        let mut table = toml::Table::try_from(&base)
            .map_err(|e| ConfigError::Parse(format!("layout defaults: {e}")))?;
        merge_tables(&mut table, &self.overrides);
        table
            .try_into()
            .map_err(|e| ConfigError::invalid("layout.overrides", e.to_string()))
    }
}

/// Shallow merge with one level of table recursion (zone_fractions etc.).
fn merge_tables(base: &mut toml::Table, overrides: &toml::Table) {
    for (key, value) in overrides {
        match (base.get_mut(key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            _ => {
                base.insert(key.clone(), value.clone());
            }
        }
    }
}

/// Policy choice; an omitted kind defaults to the layout's natural policy.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyChoice {
    pub kind: Option<PolicyKind>,
    #[serde(flatten)]
    pub params: PolicyParams,
}

/// SKU population shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogConfig {
    pub n_skus: u32,
    /// Share of the SKU list per class (A-items are 20% of SKUs).
    pub sku_shares: ClassSplit,
    /// Share of pallet volume per class (A-items are 80% of volume).
    pub volume_shares: ClassSplit,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig {
            n_skus: 120,
            sku_shares: DEFAULT_SKU_SHARE,
            volume_shares: DEFAULT_VOLUME_SPLIT,
        }
    }
}

/// One complete experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub master_seed: u64,
    pub layout: LayoutChoice,
    pub policy: PolicyChoice,
    pub catalog: CatalogConfig,
    pub pallet_mix: PalletMix,
    pub inbound: InboundConfig,
    pub outbound: OutboundConfig,
    pub vehicle: VehicleProfile,
    pub replication: ReplicationPlan,
    /// Fraction of target_slot_count pre-filled at t=0.
    pub initial_fill_fraction: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: String::new(),
            master_seed: 42,
            layout: LayoutChoice::default(),
            policy: PolicyChoice::default(),
            catalog: CatalogConfig::default(),
            pallet_mix: PalletMix::default(),
            inbound: InboundConfig::default(),
            outbound: OutboundConfig::default(),
            vehicle: VehicleProfile::default(),
            replication: ReplicationPlan::default(),
            initial_fill_fraction: 0.5,
        }
    }
}

impl Scenario {
    /// Policy in effect: the configured one, or the layout's natural match.
    pub fn effective_policy(&self) -> PolicyKind {
        self.policy.kind.unwrap_or(match self.layout.kind {
            LayoutKind::Conventional => PolicyKind::Random,
            LayoutKind::FlyingV => PolicyKind::FlyingVRandom,
            LayoutKind::Cpu => PolicyKind::CpuZone,
            LayoutKind::Current => PolicyKind::ClassDistance,
        })
    }

    pub fn effective_name(&self) -> String {
        if self.name.is_empty() {
            format!(
                "{}-{}",
                layout_kind_name(self.layout.kind),
                self.effective_policy().name()
            )
        } else {
            self.name.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let spec = self.layout.resolved_spec()?;
        spec.validate("layout")?;
        self.catalog.sku_shares.validate("catalog.sku_shares")?;
        self.catalog.volume_shares.validate("catalog.volume_shares")?;
        if self.catalog.n_skus < 3 {
            return Err(ConfigError::invalid("catalog.n_skus", "need at least 3 SKUs"));
        }
        self.pallet_mix.validate("pallet_mix")?;
        self.replication.validate("replication")?;
        self.inbound
            .validate("inbound", self.replication.day_length_s)?;
        self.outbound.validate("outbound")?;
        self.vehicle.validate("vehicle")?;
        if !(0.0..=0.95).contains(&self.initial_fill_fraction) {
            return Err(ConfigError::invalid(
                "initial_fill_fraction",
                "fill fraction must lie in [0, 0.95]",
            ));
        }
        let policy = self.effective_policy();
        if !policy.compatible_with(self.layout.kind) {
            return Err(ConfigError::invalid(
                "policy.kind",
                format!(
                    "policy {} is not valid on a {} layout",
                    policy.name(),
                    layout_kind_name(self.layout.kind)
                ),
            ));
        }
        // The vehicle has to fit every aisle class the layout uses.
        let mut narrowest = spec.aisle_width_mm;
        if self.layout.kind == LayoutKind::Cpu {
            narrowest = narrowest.min(spec.dense_aisle_mm_checked()?);
        }
        if self.layout.kind == LayoutKind::FlyingV {
            narrowest = narrowest.min(spec.v_corridor_width_mm);
        }
        if narrowest < self.vehicle.min_aisle_width_mm {
            return Err(ConfigError::invalid(
                "layout.aisle_width_mm",
                format!(
                    "narrowest aisle {} mm is below the vehicle's {} mm requirement",
                    narrowest, self.vehicle.min_aisle_width_mm
                ),
            ));
        }
        Ok(())
    }

    pub fn build_layout(&self) -> Result<Layout, ConfigError> {
        let spec = self.layout.resolved_spec()?;
        match self.layout.kind {
            LayoutKind::Conventional => build_conventional(&spec),
            LayoutKind::FlyingV => build_flying_v(&spec),
            LayoutKind::Cpu => build_cpu(&spec),
            LayoutKind::Current => {
                crate::layout::build_current(&spec)
            }
        }
    }

    pub fn build_catalog(&self) -> Result<SkuCatalog, ConfigError> {
        build_catalog(
            self.catalog.n_skus,
            &self.catalog.sku_shares,
            &self.catalog.volume_shares,
        )
    }
}

pub fn layout_kind_name(kind: LayoutKind) -> &'static str {
    match kind {
        LayoutKind::Conventional => "conventional",
        LayoutKind::FlyingV => "flying_v",
        LayoutKind::Cpu => "cpu",
        LayoutKind::Current => "current",
    }
}

impl LayoutSpec {
    fn dense_aisle_mm_checked(&self) -> Result<u32, ConfigError> {
        if self.dense_aisle_width_mm == 0 {
            return Err(ConfigError::invalid(
                "layout.dense_aisle_width_mm",
                "dense aisle width must be positive",
            ));
        }
        Ok(self.dense_aisle_width_mm)
    }
}

/// Parse and validate one scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text)
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario, ConfigError> {
    let scenario: Scenario =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

/// A set of scenarios compared under common random numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bundle {
    pub name: String,
    pub scenario: Vec<Scenario>,
}

impl Default for Bundle {
    fn default() -> Self {
        Bundle {
            name: "bundle".to_string(),
            scenario: Vec::new(),
        }
    }
}

impl Bundle {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.scenario.len() < 2 {
            return Err(ConfigError::invalid(
                "scenario",
                "a comparison bundle needs at least 2 scenarios",
            ));
        }
        let mut names: Vec<String> = Vec::new();
        for (i, s) in self.scenario.iter().enumerate() {
            s.validate()
                .map_err(|e| ConfigError::Parse(format!("scenario[{i}] ({}): {e}", s.effective_name())))?;
            let name = s.effective_name();
            if names.contains(&name) {
                return Err(ConfigError::invalid(
                    format!("scenario[{i}].name"),
                    format!("duplicate scenario name {name}"),
                ));
            }
            names.push(name);
        }
        Ok(())
    }
}

pub fn parse_bundle(path: &Path) -> Result<Bundle, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let bundle: Bundle = toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    bundle.validate()?;
    Ok(bundle)
}

/// The shipped comparison bundle: the five equal-capacity alternatives plus
/// the legacy calibration scenario and the enlarged-P variant.
pub fn table2_bundle(seed: u64) -> Bundle {
    let scenario = |name: &str, kind: LayoutKind, policy: PolicyKind| -> Scenario {
        Scenario {
            name: name.to_string(),
            master_seed: seed,
            layout: LayoutChoice {
                kind,
                overrides: toml::Table::new(),
            },
            policy: PolicyChoice {
                kind: Some(policy),
                params: PolicyParams::default(),
            },
            ..Scenario::default()
        }
    };
    let mut scenarios = vec![
        scenario("conv-random", LayoutKind::Conventional, PolicyKind::Random),
        scenario(
            "conv-class",
            LayoutKind::Conventional,
            PolicyKind::ClassDistance,
        ),
        scenario(
            "flying-v-random",
            LayoutKind::FlyingV,
            PolicyKind::FlyingVRandom,
        ),
        scenario("flying-v-abc", LayoutKind::FlyingV, PolicyKind::FlyingVAbc),
        scenario("cpu", LayoutKind::Cpu, PolicyKind::CpuZone),
    ];
    let mut current = scenario("current", LayoutKind::Current, PolicyKind::ClassDistance);
    current.inbound.truck_count = 13;
    current.outbound.truck_count = 13;
    scenarios.push(current);
    let mut enlarged = scenario("cpu-enlarged-p", LayoutKind::Cpu, PolicyKind::CpuZone);
    enlarged.layout.overrides.insert(
        "zone_fractions".into(),
        toml::Value::try_from(crate::layout::ZoneFractions {
            p: 0.24,
            e: 0.46,
            s: 0.30,
        })
        .unwrap(),
    );
    scenarios.push(enlarged);
    Bundle {
        name: "table2".to_string(),
        scenario: scenarios,
    }
}
