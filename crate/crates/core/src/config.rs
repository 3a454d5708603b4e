//! Scenario description: domain types, invariant validation, and the flat
//! key-value configuration format.
//!
//! Everything downstream (delay model, harvest model, optimizer, simulator)
//! consumes a [`ValidatedScenario`]; construction is the only place where
//! invariants are checked, so the numerical code never re-validates.
//!
//! All internal values are SI base units (W, m, s, Hz). Configuration keys
//! with a unit suffix (`*_mw`, `*_per_km2`, `*_dbm_per_hz`, `*_mhz`) are
//! converted at parse time.

use crate::{Error, Result, Violation};

/// Energy-harvesting receiver operating mode of IoT terminals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EhMode {
    /// Time switching: fraction `eta` of per-IoT-user downlink service time
    /// is used for active power transfer instead of data.
    Ts { eta: f64 },
    /// Static power splitting: fraction `nu` of the received signal power is
    /// always diverted to the harvester.
    Sps { nu: f64 },
    /// Dynamic power splitting: split ratio `nu` while being served, 1
    /// otherwise.
    Dps { nu: f64 },
}

impl EhMode {
    pub fn split(&self) -> f64 {
        match *self {
            EhMode::Ts { eta } => eta,
            EhMode::Sps { nu } | EhMode::Dps { nu } => nu,
        }
    }

    pub fn with_split(&self, split: f64) -> EhMode {
        match *self {
            EhMode::Ts { .. } => EhMode::Ts { eta: split },
            EhMode::Sps { .. } => EhMode::Sps { nu: split },
            EhMode::Dps { .. } => EhMode::Dps { nu: split },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EhMode::Ts { .. } => "ts",
            EhMode::Sps { .. } => "sps",
            EhMode::Dps { .. } => "dps",
        }
    }
}

/// Radio-layer parameters shared by every link in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    /// System bandwidth B (Hz).
    pub bandwidth_hz: f64,
    /// Random frequency reuse factor k.
    pub reuse_k: u32,
    /// Noise power spectral density N0 (W/Hz).
    pub noise_psd: f64,
    /// Path-loss exponent alpha; must exceed 2 for the interference and
    /// user-power integrals to converge.
    pub alpha: f64,
    /// BS transmit power P (W).
    pub tx_power_w: f64,
    pub tx_power_min_w: f64,
    pub tx_power_max_w: f64,
    /// Beamforming gain G over the main lobe (linear).
    pub gain: f64,
    /// Main lobe aperture a (degrees).
    pub aperture_deg: f64,
    /// Direct side-lobe loss specification. When unset, L is derived from
    /// the gain/aperture energy balance `L = 1 - (G-1) a/(360-a)`; that
    /// relation turns negative for large G·a, which validation rejects.
    pub side_lobe_override: Option<f64>,
    /// Use the noise PSD verbatim as noise power in the SINR denominator
    /// instead of `N0 * B/k`.
    pub raw_noise: bool,
}

impl RadioParams {
    /// Side-lobe loss L: the override when present, otherwise the
    /// gain/aperture relation. Always recomputed, never cached.
    pub fn side_lobe_loss(&self) -> f64 {
        match self.side_lobe_override {
            Some(l) => l,
            None => 1.0 - (self.gain - 1.0) * self.aperture_deg / (360.0 - self.aperture_deg),
        }
    }

    /// Mean antenna gain L_g seen by a user the BS is not currently serving.
    pub fn mean_gain(&self) -> f64 {
        let l = self.side_lobe_loss();
        (self.gain * self.aperture_deg + l * (360.0 - self.aperture_deg)) / 360.0
    }

    /// Noise power entering the SINR denominator (W).
    pub fn noise_power(&self) -> f64 {
        if self.raw_noise {
            self.noise_psd
        } else {
            self.noise_psd * self.bandwidth_hz / self.reuse_k as f64
        }
    }
}

/// Spatial densities of base stations and user terminals.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationParams {
    /// User density lambda_u (m^-2).
    pub lambda_u: f64,
    /// BS density lambda_b (m^-2).
    pub lambda_b: f64,
    /// Fraction gamma of users that are IoT devices.
    pub iot_fraction: f64,
    /// Fraction phi of time an IoT device spends in the active state.
    pub duty_cycle: f64,
    /// Operator policy floor on mean users per BS.
    pub min_users_per_bs: f64,
    /// Deployment ceiling on BS density (m^-2).
    pub lambda_b_max: f64,
}

/// GPS scheduling weights and UE transmit powers.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulingParams {
    /// Target ratio of BB to IoT per-bit delay in downlink.
    pub delta_d: f64,
    /// Target ratio of BB to IoT per-bit delay in uplink (also the BB GPS
    /// weight in uplink; IoT weight is 1).
    pub delta_u: f64,
    /// Downlink GPS weight of BB users. `None` selects the maximally fair
    /// value for the active EH mode.
    pub w_d: Option<f64>,
    /// BB UE transmit power (W).
    pub ue_power_bb_w: f64,
    /// IoT UE transmit power (W).
    pub ue_power_iot_w: f64,
}

/// QoS targets for information and power transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct QosTargets {
    /// Target mean per-bit delay of BB users in downlink (s/bit).
    pub tau_d0: f64,
    /// Target mean per-bit delay in uplink (s/bit).
    pub tau_u0: f64,
    /// Minimum harvested power each IoT device needs (W).
    pub h0_w: f64,
    /// Cap mu on the fraction of IoT users harvesting less than h0.
    pub outage_cap: f64,
}

/// Affine BS power draw model `q1 + U (q2 + q3 (P - P_min))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BsEnergyModel {
    pub q1_w: f64,
    pub q2_w: f64,
    pub q3: f64,
}

/// Power consumed by a BS (W) at the given downlink utilization and
/// transmit power.
pub fn bs_power(model: &BsEnergyModel, utilization: f64, p: f64, p_min: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&utilization) {
        return Err(Error::Domain(format!(
            "utilization must lie in [0, 1], got {utilization}"
        )));
    }
    Ok(model.q1_w + utilization * (model.q2_w + model.q3 * (p - p_min)))
}

/// Conversion from received RF power to harvested power.
#[derive(Debug, Clone, PartialEq)]
pub enum HarvestCurve {
    /// `h = xi * h_in` with conversion efficiency xi.
    Linear { efficiency: f64 },
    /// Normalized sigmoid with saturation `h_max`, sensitivity threshold
    /// `h_s`, steepness `chi` (1/W) and shape offset `iota`.
    Sigmoid {
        h_max_w: f64,
        h_s_w: f64,
        chi_per_w: f64,
        iota: f64,
    },
}

/// Harvested power (W) for received power `h_in` (W).
pub fn theta(curve: &HarvestCurve, h_in: f64) -> f64 {
    match *curve {
        HarvestCurve::Linear { efficiency } => efficiency * h_in,
        HarvestCurve::Sigmoid {
            h_max_w,
            h_s_w,
            chi_per_w,
            iota,
        } => {
            let es = (-chi_per_w * h_s_w + iota).exp();
            let ein = (-chi_per_w * h_in + iota).exp();
            let v = h_max_w / es * ((1.0 + es) / (1.0 + ein) - 1.0);
            v.max(0.0)
        }
    }
}

/// Quadrature, truncation, and fixed-point controls.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericsConfig {
    /// Relative tolerance of every adaptive quadrature.
    pub quad_rel_tol: f64,
    /// Radial truncation: integrate up to r with `lambda_b pi r^2 =
    /// tail_mass` (tail probability e^-tail_mass).
    pub tail_mass: f64,
    /// Fixed-point absolute tolerance as a fraction of tau_d0.
    pub fp_tol_factor: f64,
    /// Damping of the delay fixed-point iteration.
    pub fp_damping: f64,
    pub fp_max_iter: usize,
    /// Grid resolution for harvest CDF level-set integration.
    pub cdf_grid_points: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            quad_rel_tol: 1e-6,
            tail_mass: 40.0,
            fp_tol_factor: 1e-9,
            fp_damping: 0.5,
            fp_max_iter: 200,
            cdf_grid_points: 512,
        }
    }
}

/// Switches reproducing the source formulas verbatim where this crate
/// deliberately departs from them.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompatFlags {
    /// Evaluate the harvest CDF as `CDF_r(g^-1(h0))` literally instead of
    /// the level-set probability of `{g <= h0}`.
    pub verbatim_cdf_h: bool,
    /// Use the `-k2 [CDF_h - mu]^-` penalty term literally instead of the
    /// corrected hinge `+k2 (CDF_h - mu)^+`.
    pub verbatim_penalty: bool,
}

/// Full immutable description of a network scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub radio: RadioParams,
    pub population: PopulationParams,
    pub scheduling: SchedulingParams,
    pub qos: QosTargets,
    pub energy: BsEnergyModel,
    pub harvest: HarvestCurve,
    pub mode: EhMode,
    pub numerics: NumericsConfig,
    pub compat: CompatFlags,
    /// When false, IoT devices harvest only the active transfer from their
    /// serving BS: interference, user transmissions, and the serving BS's
    /// out-of-service radiation are excluded from the harvest budget.
    pub passive_charging: bool,
}

impl Default for ScenarioConfig {
    /// Baseline urban macro scenario. `radio.l_override` is set because the
    /// default gain/aperture pair makes the derived side-lobe loss negative;
    /// see [`RadioParams::side_lobe_loss`].
    fn default() -> Self {
        ScenarioConfig {
            radio: RadioParams {
                bandwidth_hz: 50e6,
                reuse_k: 3,
                noise_psd: dbm_per_hz_to_w(-174.0),
                alpha: 3.0,
                tx_power_w: 5.0,
                tx_power_min_w: 1.0,
                tx_power_max_w: 11.0,
                gain: 10.0,
                aperture_deg: 45.0,
                side_lobe_override: Some(0.1),
                raw_noise: false,
            },
            population: PopulationParams {
                lambda_u: 1e-3,
                lambda_b: 2e-5,
                iot_fraction: 0.8,
                duty_cycle: 1.0,
                min_users_per_bs: 5.0,
                lambda_b_max: 0.01,
            },
            scheduling: SchedulingParams {
                delta_d: 100.0,
                delta_u: 1.0,
                w_d: None,
                ue_power_bb_w: 0.2,
                ue_power_iot_w: 0.2,
            },
            qos: QosTargets {
                tau_d0: 1e-5,
                tau_u0: 1e-4,
                h0_w: 1e-3,
                outage_cap: 0.05,
            },
            energy: BsEnergyModel {
                q1_w: 1100.0,
                q2_w: 100.0,
                q3: 30.0,
            },
            harvest: HarvestCurve::Linear { efficiency: 0.9 },
            mode: EhMode::Ts { eta: 0.5 },
            numerics: NumericsConfig::default(),
            compat: CompatFlags::default(),
            passive_charging: true,
        }
    }
}

fn dbm_per_hz_to_w(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

/// A scenario whose invariants have all been checked, with the derived
/// antenna quantities populated.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedScenario {
    cfg: ScenarioConfig,
    side_lobe: f64,
    mean_gain: f64,
}

impl ValidatedScenario {
    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    /// Side-lobe loss L (validated positive).
    pub fn side_lobe(&self) -> f64 {
        self.side_lobe
    }

    /// Mean out-of-service gain L_g.
    pub fn mean_gain(&self) -> f64 {
        self.mean_gain
    }

    /// Radial truncation radius for all integrals (m).
    pub fn truncation_radius(&self) -> f64 {
        (self.cfg.numerics.tail_mass / (self.cfg.population.lambda_b * std::f64::consts::PI))
            .sqrt()
    }

    /// Validation is idempotent: revalidating returns an equal scenario.
    pub fn revalidate(&self) -> Result<ValidatedScenario> {
        validate(self.cfg.clone())
    }
}

impl std::ops::Deref for ValidatedScenario {
    type Target = ScenarioConfig;
    fn deref(&self) -> &ScenarioConfig {
        &self.cfg
    }
}

/// Check every type invariant, reporting all violations at once.
pub fn validate(cfg: ScenarioConfig) -> Result<ValidatedScenario> {
    let mut v: Vec<Violation> = Vec::new();
    let mut fail = |field: &str, message: String| {
        v.push(Violation {
            field: field.to_string(),
            message,
        });
    };

    let r = &cfg.radio;
    if !(r.bandwidth_hz > 0.0) {
        fail("radio.bandwidth_hz", format!("must be positive, got {}", r.bandwidth_hz));
    }
    if r.reuse_k < 1 {
        fail("radio.reuse_k", "must be at least 1".into());
    }
    if !(r.noise_psd > 0.0) {
        fail("radio.noise_psd", format!("must be positive, got {}", r.noise_psd));
    }
    if !(r.alpha > 2.0) {
        fail(
            "radio.alpha",
            format!("path-loss exponent must exceed 2 (interference and user-power integrals diverge otherwise), got {}", r.alpha),
        );
    }
    if !(r.tx_power_min_w > 0.0) {
        fail("radio.tx_power_min_w", format!("must be positive, got {}", r.tx_power_min_w));
    }
    if r.tx_power_min_w > r.tx_power_max_w {
        fail(
            "radio.tx_power_max_w",
            format!("P_max {} below P_min {}", r.tx_power_max_w, r.tx_power_min_w),
        );
    }
    if r.tx_power_w < r.tx_power_min_w || r.tx_power_w > r.tx_power_max_w {
        fail(
            "radio.tx_power_w",
            format!(
                "P = {} outside [{}, {}]",
                r.tx_power_w, r.tx_power_min_w, r.tx_power_max_w
            ),
        );
    }
    if !(r.gain >= 1.0) {
        fail("radio.gain", format!("beamforming gain must be at least 1, got {}", r.gain));
    }
    if !(r.aperture_deg > 0.0 && r.aperture_deg < 360.0) {
        fail("radio.aperture_deg", format!("aperture must lie in (0, 360), got {}", r.aperture_deg));
    } else {
        let l = r.side_lobe_loss();
        if !(l > 0.0) {
            match r.side_lobe_override {
                Some(_) => fail("radio.l_override", format!("side-lobe loss must be positive, got {l}")),
                None => fail(
                    "radio.gain",
                    format!(
                        "gain {} with aperture {} deg gives side-lobe loss L = {:.4} <= 0; \
                         the pair is inconsistent with L = 1 - (G-1) a/(360-a). \
                         Reduce gain or aperture, or set radio.l_override",
                        r.gain, r.aperture_deg, l
                    ),
                ),
            }
        }
    }

    let p = &cfg.population;
    if !(p.lambda_u > 0.0) {
        fail("population.lambda_u", format!("must be positive, got {}", p.lambda_u));
    }
    if !(p.lambda_b > 0.0) {
        fail("population.lambda_b", format!("must be positive, got {}", p.lambda_b));
    }
    if !(0.0..=1.0).contains(&p.iot_fraction) {
        fail("population.iot_fraction", format!("must lie in [0, 1], got {}", p.iot_fraction));
    }
    if !(p.duty_cycle > 0.0 && p.duty_cycle <= 1.0) {
        fail("population.duty_cycle", format!("must lie in (0, 1], got {}", p.duty_cycle));
    }
    if !(p.min_users_per_bs >= 0.0) {
        fail("population.min_users_per_bs", format!("must be nonnegative, got {}", p.min_users_per_bs));
    }
    if !(p.lambda_b_max > 0.0) {
        fail("population.lambda_b_max", format!("must be positive, got {}", p.lambda_b_max));
    }

    let s = &cfg.scheduling;
    for (name, val) in [
        ("scheduling.delta_d", s.delta_d),
        ("scheduling.delta_u", s.delta_u),
        ("scheduling.ue_power_bb_w", s.ue_power_bb_w),
        ("scheduling.ue_power_iot_w", s.ue_power_iot_w),
    ] {
        if !(val > 0.0) {
            fail(name, format!("must be positive, got {val}"));
        }
    }
    if let Some(w) = s.w_d {
        if !(w > 0.0) {
            fail("scheduling.w_d", format!("must be positive, got {w}"));
        }
    }

    let q = &cfg.qos;
    for (name, val) in [
        ("qos.tau_d0_s", q.tau_d0),
        ("qos.tau_u0_s", q.tau_u0),
        ("qos.h0_w", q.h0_w),
    ] {
        if !(val > 0.0) {
            fail(name, format!("must be positive, got {val}"));
        }
    }
    if !(q.outage_cap > 0.0 && q.outage_cap < 1.0) {
        fail("qos.outage_cap", format!("must lie in (0, 1), got {}", q.outage_cap));
    }

    let e = &cfg.energy;
    for (name, val) in [("energy.q1_w", e.q1_w), ("energy.q2_w", e.q2_w), ("energy.q3", e.q3)] {
        if !(val >= 0.0) {
            fail(name, format!("must be nonnegative, got {val}"));
        }
    }

    match cfg.harvest {
        HarvestCurve::Linear { efficiency } => {
            if !(efficiency > 0.0 && efficiency <= 1.0) {
                fail("harvest.efficiency", format!("must lie in (0, 1], got {efficiency}"));
            }
        }
        HarvestCurve::Sigmoid {
            h_max_w,
            h_s_w,
            chi_per_w,
            ..
        } => {
            if !(h_max_w > 0.0) {
                fail("harvest.h_max_w", format!("must be positive, got {h_max_w}"));
            }
            if !(h_s_w >= 0.0) {
                fail("harvest.h_s_w", format!("must be nonnegative, got {h_s_w}"));
            }
            if !(chi_per_w > 0.0) {
                fail("harvest.chi_per_w", format!("must be positive, got {chi_per_w}"));
            }
        }
    }

    let split = cfg.mode.split();
    if !(0.0..=1.0).contains(&split) {
        fail("mode.split", format!("must lie in [0, 1], got {split}"));
    }

    let n = &cfg.numerics;
    if !(n.quad_rel_tol > 0.0) {
        fail("numerics.quad_rel_tol", format!("must be positive, got {}", n.quad_rel_tol));
    }
    if !(n.tail_mass > 0.0) {
        fail("numerics.tail_mass", format!("must be positive, got {}", n.tail_mass));
    }
    if !(n.fp_tol_factor > 0.0) {
        fail("numerics.fp_tol_factor", format!("must be positive, got {}", n.fp_tol_factor));
    }
    if !(n.fp_damping > 0.0 && n.fp_damping <= 1.0) {
        fail("numerics.fp_damping", format!("must lie in (0, 1], got {}", n.fp_damping));
    }
    if n.fp_max_iter == 0 {
        fail("numerics.fp_max_iter", "must be at least 1".into());
    }
    if n.cdf_grid_points < 8 {
        fail("numerics.cdf_grid_points", format!("must be at least 8, got {}", n.cdf_grid_points));
    }

    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    let side_lobe = cfg.radio.side_lobe_loss();
    let mean_gain = cfg.radio.mean_gain();
    Ok(ValidatedScenario {
        cfg,
        side_lobe,
        mean_gain,
    })
}

// ---------------------------------------------------------------------------
// Flat key-value configuration format
// ---------------------------------------------------------------------------

impl ScenarioConfig {
    /// Parse a configuration file body on top of the defaults.
    ///
    /// Format: one `key = value` pair per line, `#` starts a comment,
    /// blank lines ignored. Unknown keys and duplicate keys are errors.
    pub fn from_config_text(text: &str) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::default();
        cfg.apply_config_text(text)?;
        Ok(cfg)
    }

    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        let mut seen: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            seen.push(key.to_string());
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Set a single dotted key. Used by the parser, `--set` overrides, and
    /// sweep specifications.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num(key: &str, value: &str) -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("key `{key}`: `{value}` is not a number")))
        }
        fn int(key: &str, value: &str) -> Result<u64> {
            value
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("key `{key}`: `{value}` is not an integer")))
        }
        fn boolean(key: &str, value: &str) -> Result<bool> {
            match value {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(Error::Config(format!("key `{key}`: `{value}` is not a boolean"))),
            }
        }

        match key {
            "radio.bandwidth_hz" => self.radio.bandwidth_hz = num(key, value)?,
            "radio.bandwidth_mhz" => self.radio.bandwidth_hz = num(key, value)? * 1e6,
            "radio.reuse_k" => self.radio.reuse_k = int(key, value)? as u32,
            "radio.noise_psd_w_per_hz" => self.radio.noise_psd = num(key, value)?,
            "radio.noise_psd_dbm_per_hz" => self.radio.noise_psd = dbm_per_hz_to_w(num(key, value)?),
            "radio.alpha" => self.radio.alpha = num(key, value)?,
            "radio.tx_power_w" => self.radio.tx_power_w = num(key, value)?,
            "radio.tx_power_min_w" => self.radio.tx_power_min_w = num(key, value)?,
            "radio.tx_power_max_w" => self.radio.tx_power_max_w = num(key, value)?,
            "radio.gain" => self.radio.gain = num(key, value)?,
            "radio.aperture_deg" => self.radio.aperture_deg = num(key, value)?,
            "radio.l_override" => {
                self.radio.side_lobe_override = if value == "none" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "radio.raw_noise" => self.radio.raw_noise = boolean(key, value)?,

            "population.lambda_u" => self.population.lambda_u = num(key, value)?,
            "population.lambda_u_per_km2" => self.population.lambda_u = num(key, value)? * 1e-6,
            "population.lambda_b" => self.population.lambda_b = num(key, value)?,
            "population.lambda_b_per_km2" => self.population.lambda_b = num(key, value)? * 1e-6,
            "population.iot_fraction" => self.population.iot_fraction = num(key, value)?,
            "population.duty_cycle" => self.population.duty_cycle = num(key, value)?,
            "population.min_users_per_bs" => self.population.min_users_per_bs = num(key, value)?,
            "population.lambda_b_max" => self.population.lambda_b_max = num(key, value)?,
            "population.lambda_b_max_per_km2" => {
                self.population.lambda_b_max = num(key, value)? * 1e-6
            }

            "scheduling.delta_d" => self.scheduling.delta_d = num(key, value)?,
            "scheduling.delta_u" => self.scheduling.delta_u = num(key, value)?,
            "scheduling.w_d" => {
                self.scheduling.w_d = if value == "auto" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "scheduling.ue_power_bb_w" => self.scheduling.ue_power_bb_w = num(key, value)?,
            "scheduling.ue_power_iot_w" => self.scheduling.ue_power_iot_w = num(key, value)?,

            "qos.tau_d0_s" => self.qos.tau_d0 = num(key, value)?,
            "qos.tau_u0_s" => self.qos.tau_u0 = num(key, value)?,
            "qos.h0_w" => self.qos.h0_w = num(key, value)?,
            "qos.h0_mw" => self.qos.h0_w = num(key, value)? * 1e-3,
            "qos.outage_cap" => self.qos.outage_cap = num(key, value)?,

            "energy.q1_w" => self.energy.q1_w = num(key, value)?,
            "energy.q2_w" => self.energy.q2_w = num(key, value)?,
            "energy.q3" => self.energy.q3 = num(key, value)?,

            "harvest.kind" => match value {
                "linear" => {
                    if !matches!(self.harvest, HarvestCurve::Linear { .. }) {
                        self.harvest = HarvestCurve::Linear { efficiency: 0.9 };
                    }
                }
                "sigmoid" => {
                    if !matches!(self.harvest, HarvestCurve::Sigmoid { .. }) {
                        self.harvest = HarvestCurve::Sigmoid {
                            h_max_w: 10e-3,
                            h_s_w: 0.064e-3,
                            chi_per_w: 274.0,
                            iota: 0.9,
                        };
                    }
                }
                _ => {
                    return Err(Error::Config(format!(
                        "key `harvest.kind`: expected linear or sigmoid, got `{value}`"
                    )))
                }
            },
            "harvest.efficiency" => match &mut self.harvest {
                HarvestCurve::Linear { efficiency } => *efficiency = num(key, value)?,
                _ => {
                    return Err(Error::Config(
                        "harvest.efficiency applies to the linear curve; set harvest.kind = linear first".into(),
                    ))
                }
            },
            "harvest.h_max_w" | "harvest.h_max_mw" | "harvest.h_s_w" | "harvest.h_s_mw"
            | "harvest.chi_per_w" | "harvest.chi_per_mw" | "harvest.iota" => {
                let parsed = num(key, value)?;
                match &mut self.harvest {
                    HarvestCurve::Sigmoid {
                        h_max_w,
                        h_s_w,
                        chi_per_w,
                        iota,
                    } => match key {
                        "harvest.h_max_w" => *h_max_w = parsed,
                        "harvest.h_max_mw" => *h_max_w = parsed * 1e-3,
                        "harvest.h_s_w" => *h_s_w = parsed,
                        "harvest.h_s_mw" => *h_s_w = parsed * 1e-3,
                        "harvest.chi_per_w" => *chi_per_w = parsed,
                        "harvest.chi_per_mw" => *chi_per_w = parsed * 1e3,
                        "harvest.iota" => *iota = parsed,
                        _ => unreachable!(),
                    },
                    _ => {
                        return Err(Error::Config(format!(
                            "{key} applies to the sigmoid curve; set harvest.kind = sigmoid first"
                        )))
                    }
                }
            }
            "harvest.passive" => self.passive_charging = boolean(key, value)?,

            "mode.kind" => {
                let split = self.mode.split();
                self.mode = match value {
                    "ts" => EhMode::Ts { eta: split },
                    "sps" => EhMode::Sps { nu: split },
                    "dps" => EhMode::Dps { nu: split },
                    _ => {
                        return Err(Error::Config(format!(
                            "key `mode.kind`: expected ts, sps or dps, got `{value}`"
                        )))
                    }
                };
            }
            "mode.split" => self.mode = self.mode.with_split(num(key, value)?),

            "numerics.quad_rel_tol" => self.numerics.quad_rel_tol = num(key, value)?,
            "numerics.tail_mass" => self.numerics.tail_mass = num(key, value)?,
            "numerics.fp_tol_factor" => self.numerics.fp_tol_factor = num(key, value)?,
            "numerics.fp_damping" => self.numerics.fp_damping = num(key, value)?,
            "numerics.fp_max_iter" => self.numerics.fp_max_iter = int(key, value)? as usize,
            "numerics.cdf_grid_points" => self.numerics.cdf_grid_points = int(key, value)? as usize,

            "compat.verbatim_cdf_h" => self.compat.verbatim_cdf_h = boolean(key, value)?,
            "compat.verbatim_penalty" => self.compat.verbatim_penalty = boolean(key, value)?,

            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }
}

/// Named presets applied on top of the defaults, in the order given.
pub fn preset(name: &str) -> Option<&'static str> {
    Some(match name {
        // Full baseline: urban macro cell, 80% IoT share, linear harvesting.
        "paper-default" => {
            "radio.bandwidth_hz = 50e6\n\
             radio.reuse_k = 3\n\
             radio.noise_psd_dbm_per_hz = -174\n\
             radio.alpha = 3\n\
             radio.gain = 10\n\
             radio.aperture_deg = 45\n\
             # gain 10 over a 45 deg lobe forces L < 0 in the strict relation;\n\
             # a -10 dB side-lobe floor is used instead.\n\
             radio.l_override = 0.1\n\
             radio.tx_power_min_w = 1\n\
             radio.tx_power_max_w = 11\n\
             radio.tx_power_w = 5\n\
             population.lambda_u = 1e-3\n\
             population.lambda_b = 2e-5\n\
             population.iot_fraction = 0.8\n\
             population.duty_cycle = 1\n\
             population.min_users_per_bs = 5\n\
             population.lambda_b_max = 0.01\n\
             scheduling.delta_d = 100\n\
             scheduling.delta_u = 1\n\
             scheduling.w_d = auto\n\
             scheduling.ue_power_bb_w = 0.2\n\
             scheduling.ue_power_iot_w = 0.2\n\
             qos.tau_d0_s = 1e-5\n\
             qos.tau_u0_s = 1e-4\n\
             qos.h0_mw = 1\n\
             qos.outage_cap = 0.05\n\
             energy.q1_w = 1100\n\
             energy.q2_w = 100\n\
             energy.q3 = 30\n\
             harvest.kind = linear\n\
             harvest.efficiency = 0.9\n\
             mode.kind = ts\n\
             mode.split = 0.5\n"
        }
        // Low load proportionality macro BS (27% load-proportional share).
        "llp" => {
            "energy.q1_w = 1100\n\
             energy.q2_w = 100\n\
             energy.q3 = 30\n"
        }
        // High load proportionality BS (75%), e.g. micro-sleep capable.
        "hlp" => {
            "energy.q1_w = 482.3\n\
             energy.q2_w = 48.23\n\
             energy.q3 = 144.69\n"
        }
        "ts" => "mode.kind = ts\n",
        "sps" => "mode.kind = sps\n",
        "dps" => "mode.kind = dps\n",
        // Nonlinear harvester fitted to approximate the 0.9 linear curve in
        // its quasilinear range.
        "sigmoid-eh" => {
            "harvest.kind = sigmoid\n\
             harvest.h_max_mw = 10\n\
             harvest.h_s_mw = 0.064\n\
             harvest.chi_per_w = 274\n\
             harvest.iota = 0.9\n"
        }
        _ => return None,
    })
}

pub const PRESET_NAMES: &[&str] = &["paper-default", "llp", "hlp", "ts", "sps", "dps", "sigmoid-eh"];
