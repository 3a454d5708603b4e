//! Harvested-power model: the received-power decomposition F(r) + Z(r)/f(r)
//! per EH receiver mode, the harvest map g(r), the harvest outage CDF, and
//! the exact per-location received power used by the simulator.

use crate::config::{theta, EhMode, ValidatedScenario};
use crate::geometry::{cdf_r, cdf_r_inv, f_of_r, KernelTable};
use crate::perf::{mean_interference, PerformanceReport};
use crate::{Error, Result};


/// Radial harvest profile of one converged scenario.
///
/// `g(r)` is the harvested power of the typical IoT user at serving distance
/// r in the dense-IoT approximation: `Theta(F(r) + Z(r) / f(r, w_d))`, with
/// the received power clamped at zero before the harvest curve (the
/// interference-subtraction term of Z can drive the expression negative at
/// large r, where the physical received power is just small).
pub struct HarvestProfile<'a> {
    scen: &'a ValidatedScenario,
    table: &'a KernelTable,
    /// Downlink utilization entering the radiation terms, capped at 1: a BS
    /// cannot transmit more than all of the time.
    util_dl: f64,
    o_bar: f64,
    w_d: f64,
    r_lo: f64,
    r_hi: f64,
}

impl<'a> HarvestProfile<'a> {
    pub fn util_dl(&self) -> f64 {
        self.util_dl
    }

    pub fn w_d(&self) -> f64 {
        self.w_d
    }

    /// Validity range of the radial profile (m).
    pub fn support(&self) -> (f64, f64) {
        (self.r_lo, self.r_hi)
    }

    /// Distance-independent harvest terms received at full antenna share:
    /// the serving BS's out-of-service radiation, total cross-BS
    /// interference, and user transmissions (W).
    pub fn f_component(&self, r: f64) -> f64 {
        let radio = &self.scen.radio;
        let u = self.util_dl;
        if !self.scen.passive_charging {
            return 0.0;
        }
        let passive_bs = radio.tx_power_w * r.powf(-radio.alpha) * self.scen.mean_gain() * u;
        let k_ibar = radio.reuse_k as f64 * mean_interference(r, self.scen, u);
        let f_ts = passive_bs + k_ibar + self.o_bar;
        match self.scen.mode {
            EhMode::Ts { .. } | EhMode::Dps { .. } => f_ts,
            EhMode::Sps { nu } => nu * f_ts,
        }
    }

    /// Harvest terms proportional to the user's GPS share (W); divided by
    /// f(r, w_d) in g.
    pub fn z_component(&self, r: f64) -> f64 {
        let radio = &self.scen.radio;
        let u = self.util_dl;
        let p_r = radio.tx_power_w * r.powf(-radio.alpha);
        let gain = radio.gain;
        let l_g = self.scen.mean_gain();
        if !self.scen.passive_charging {
            // Active charging from the serving beam only.
            let s = self.scen.mode.split();
            return u * p_r * gain * s;
        }
        match self.scen.mode {
            EhMode::Ts { eta } => {
                let k_ibar = radio.reuse_k as f64 * mean_interference(r, self.scen, u);
                u * (p_r * (gain * eta - l_g) - (1.0 - eta) * (k_ibar + self.o_bar))
            }
            EhMode::Sps { nu } => nu * p_r * u * (gain - l_g),
            EhMode::Dps { nu } => p_r * u * (nu * gain - l_g),
        }
    }

    /// Mean received power at serving distance r, clamped at zero (W).
    pub fn received_power(&self, r: f64) -> f64 {
        let pop = &self.scen.population;
        let f = f_of_r(pop.lambda_u, pop.iot_fraction, pop.duty_cycle, self.w_d, self.table.j(r));
        (self.f_component(r) + self.z_component(r) / f).max(0.0)
    }

    /// Harvested power at serving distance r (W).
    pub fn g(&self, r: f64) -> f64 {
        theta(&self.scen.harvest, self.received_power(r))
    }
}

/// Build the radial harvest profile from a converged performance report.
pub fn build_profile<'a>(
    scen: &'a ValidatedScenario,
    perf: &PerformanceReport,
    table: &'a KernelTable,
) -> Result<HarvestProfile<'a>> {
    if !perf.converged {
        return Err(Error::InfeasibleProfile(
            "performance report did not converge".into(),
        ));
    }
    let pop = &scen.population;
    let weight = pop.lambda_u * (perf.w_d + pop.iot_fraction * (pop.duty_cycle - perf.w_d));
    if !(weight > 0.0) {
        return Err(Error::InfeasibleProfile(format!(
            "cell population weight f(r, w_d) vanishes (coefficient {weight})"
        )));
    }
    let lambda_b = pop.lambda_b;
    Ok(HarvestProfile {
        scen,
        table,
        util_dl: perf.u_d.min(1.0),
        o_bar: perf.o_bar,
        w_d: perf.w_d,
        r_lo: cdf_r_inv(lambda_b, 1e-12),
        r_hi: scen.truncation_radius(),
    })
}

/// P[harvested power <= h0] for the typical IoT user.
///
/// Computed as the Rayleigh serving-distance mass of the level set
/// `{r : g(r) <= h0}`: g need not be monotone (the interference-subtraction
/// term of Z changes sign along r), so the level set is resolved on a grid
/// with bisection-refined crossings. The verbatim compatibility switch
/// instead composes `CDF_r(g^-1(h0))` literally under a monotone-decreasing
/// assumption.
pub fn cdf_h(profile: &HarvestProfile<'_>, h0: f64) -> f64 {
    if profile.scen.compat.verbatim_cdf_h {
        return cdf_h_verbatim(profile, h0);
    }
    let lambda_b = profile.scen.population.lambda_b;
    let n = profile.scen.numerics.cdf_grid_points;
    let (r_lo, r_hi) = profile.support();
    let ln_lo = r_lo.ln();
    let dln = (r_hi.ln() - ln_lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| (ln_lo + dln * i as f64).exp()).collect();

    let below = |r: f64| profile.g(r) <= h0;

    let mut mass = 0.0;
    // Head: negligible Rayleigh mass below r_lo, classified by the endpoint.
    if below(r_lo) {
        mass += cdf_r(lambda_b, r_lo);
    }
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ba, bb) = (below(a), below(b));
        let cell = cdf_r(lambda_b, b) - cdf_r(lambda_b, a);
        match (ba, bb) {
            (true, true) => mass += cell,
            (false, false) => {}
            _ => {
                // One sign change resolved by bisection.
                let (mut lo, mut hi) = (a, b);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if below(mid) == ba {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-12 * b {
                        break;
                    }
                }
                let cross = 0.5 * (lo + hi);
                if ba {
                    mass += cdf_r(lambda_b, cross) - cdf_r(lambda_b, a);
                } else {
                    mass += cdf_r(lambda_b, b) - cdf_r(lambda_b, cross);
                }
            }
        }
    }
    // Tail beyond the truncation radius, classified by the endpoint.
    if below(r_hi) {
        mass += 1.0 - cdf_r(lambda_b, r_hi);
    }
    mass.clamp(0.0, 1.0)
}

fn cdf_h_verbatim(profile: &HarvestProfile<'_>, h0: f64) -> f64 {
    let lambda_b = profile.scen.population.lambda_b;
    let (r_lo, r_hi) = profile.support();
    if profile.g(r_lo) <= h0 {
        return cdf_r(lambda_b, r_lo);
    }
    if profile.g(r_hi) > h0 {
        // g stays above h0 on the whole support; the literal composition
        // sends g^-1 past the truncation radius.
        return 1.0;
    }
    let (mut lo, mut hi) = (r_lo, r_hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if profile.g(mid) > h0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    cdf_r(lambda_b, 0.5 * (lo + hi))
}

/// Per-location inputs for the exact received-power expression.
#[derive(Debug, Clone, Copy)]
pub struct LocalEnv {
    /// Distance to the serving BS (m).
    pub distance: f64,
    /// Downlink utilization of the serving BS.
    pub util_dl: f64,
    /// GPS share K = 1 / (N_iot + w_d N_bb) of the serving cell.
    pub gps_share: f64,
    /// Total power received from non-serving BSs, across all reuse bands (W).
    pub bs_interference: f64,
    /// Power received from user transmissions (W).
    pub user_power: f64,
}

/// Exact received power at one location for the given EH mode, clamped at
/// zero (W). This is the per-realization form the simulator measures; its
/// dense-IoT expectation is the F/Z decomposition above.
pub fn pointwise_received_power(scen: &ValidatedScenario, local: &LocalEnv) -> f64 {
    let radio = &scen.radio;
    let p_r = radio.tx_power_w * local.distance.powf(-radio.alpha);
    let gain = radio.gain;
    let l_g = scen.mean_gain();
    let u = local.util_dl;
    let k = local.gps_share;
    let ambient = local.bs_interference + local.user_power;

    let h_in = if !scen.passive_charging {
        match scen.mode {
            EhMode::Ts { eta } => p_r * u * gain * eta * k,
            EhMode::Sps { nu } | EhMode::Dps { nu } => p_r * u * gain * nu * k,
        }
    } else {
        match scen.mode {
            EhMode::Ts { eta } => {
                p_r * u * (gain * eta * k + l_g * (1.0 - k))
                    + (1.0 - k * u * (1.0 - eta)) * ambient
            }
            EhMode::Sps { nu } => nu * p_r * u * (gain * k + l_g * (1.0 - k)) + nu * ambient,
            EhMode::Dps { nu } => p_r * u * (gain * nu * k + l_g * (1.0 - k)) + ambient,
        }
    };
    h_in.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate, HarvestCurve, ScenarioConfig};
    use crate::perf;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn set_up(cfg: ScenarioConfig) -> (ValidatedScenario, KernelTable) {
        let s = validate(cfg).unwrap();
        let t = KernelTable::build(s.population.lambda_b).unwrap();
        (s, t)
    }

    fn profile_of<'a>(
        s: &'a ValidatedScenario,
        t: &'a KernelTable,
    ) -> (PerformanceReport, HarvestProfile<'a>) {
        let perf = perf::evaluate_with_table(s, t).unwrap();
        let prof = build_profile(s, &perf, t).unwrap();
        (perf, prof)
    }

    #[test]
    fn ts_full_split_drops_passive_loss_term() {
        // eta = 1 with an explicit BB weight: Z = u P r^-a (G - L_g).
        let mut cfg = ScenarioConfig::default();
        cfg.mode = EhMode::Ts { eta: 1.0 };
        cfg.scheduling.w_d = Some(5.0);
        let (s, t) = set_up(cfg);
        let (perf, prof) = profile_of(&s, &t);
        let u = perf.u_d.min(1.0);
        let r = 120.0f64;
        let expected =
            u * s.radio.tx_power_w * r.powf(-s.radio.alpha) * (s.radio.gain - s.mean_gain());
        assert_relative_eq!(prof.z_component(r), expected, max_relative = 1e-12);
    }

    #[test]
    fn sps_zero_split_harvests_nothing() {
        let mut cfg = ScenarioConfig::default();
        cfg.mode = EhMode::Sps { nu: 0.0 };
        let (s, t) = set_up(cfg);
        let (_, prof) = profile_of(&s, &t);
        for r in [5.0, 50.0, 500.0] {
            assert_eq!(prof.f_component(r), 0.0);
            assert_eq!(prof.z_component(r), 0.0);
            assert_eq!(prof.g(r), 0.0);
        }
    }

    #[test]
    fn dps_dominates_sps_pointwise() {
        let nu = 0.4;
        let mut a = ScenarioConfig::default();
        a.mode = EhMode::Sps { nu };
        a.scheduling.w_d = Some(30.0);
        let mut b = a.clone();
        b.mode = EhMode::Dps { nu };
        let (sa, ta) = set_up(a);
        let (sb, tb) = set_up(b);
        let (_, pa) = profile_of(&sa, &ta);
        let (_, pb) = profile_of(&sb, &tb);
        for r in [10.0, 80.0, 300.0] {
            assert!(pb.f_component(r) >= pa.f_component(r));
        }
    }

    #[test]
    fn cdf_h_limits() {
        let (s, t) = set_up(ScenarioConfig::default());
        let (_, prof) = profile_of(&s, &t);
        // g strictly positive on the support here.
        assert!(prof.g(prof.support().1) > 0.0);
        assert_eq!(cdf_h(&prof, 0.0), 0.0);
        assert_relative_eq!(cdf_h(&prof, 1e9), 1.0);
    }

    #[test]
    fn cdf_h_monotone_in_threshold() {
        let (s, t) = set_up(ScenarioConfig::default());
        let (_, prof) = profile_of(&s, &t);
        let mut last = -1.0;
        for i in -12..0 {
            let h0 = 10f64.powi(i);
            let c = cdf_h(&prof, h0);
            assert!(c >= last, "CDF decreased at h0 = {h0}: {c} < {last}");
            assert!((0.0..=1.0).contains(&c));
            last = c;
        }
    }

    #[test]
    fn harvest_grows_with_split_near_mean_distance() {
        // Finite-difference dg/deta >= 0 at the mean serving distance where
        // active charging dominates.
        let r_mean = 0.5 / ScenarioConfig::default().population.lambda_b.sqrt();
        let g_at = |eta: f64| {
            let mut cfg = ScenarioConfig::default();
            cfg.mode = EhMode::Ts { eta };
            cfg.scheduling.w_d = Some(40.0);
            let (s, t) = set_up(cfg);
            let (_, prof) = profile_of(&s, &t);
            prof.g(r_mean)
        };
        assert!(g_at(0.55) >= g_at(0.45));
    }

    #[test]
    fn robust_cdf_matches_monotone_inversion() {
        // Wherever g is monotone decreasing, the level-set mass must equal
        // the complement of the CDF_r composition with the bisected inverse.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 50 {
            let mut cfg = ScenarioConfig::default();
            cfg.population.lambda_b = 10f64.powf(rng.gen_range(-5.0..-3.0));
            cfg.population.lambda_u = cfg.population.lambda_b * rng.gen_range(5.0..50.0);
            cfg.radio.tx_power_w = rng.gen_range(1.0..11.0);
            cfg.mode = match rng.gen_range(0..3) {
                0 => EhMode::Ts { eta: rng.gen_range(0.1..0.9) },
                1 => EhMode::Sps { nu: rng.gen_range(0.1..0.9) },
                _ => EhMode::Dps { nu: rng.gen_range(0.1..0.9) },
            };
            let (s, t) = set_up(cfg);
            let perf = match perf::evaluate_with_table(&s, &t) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let prof = build_profile(&s, &perf, &t).unwrap();
            let (r_lo, r_hi) = prof.support();
            // verify monotone decreasing on a grid
            let n = 256;
            let lr = (r_hi / r_lo).ln() / (n - 1) as f64;
            let gs: Vec<f64> = (0..n).map(|i| prof.g(r_lo * (lr * i as f64).exp())).collect();
            if !gs.windows(2).all(|w| w[1] <= w[0]) {
                continue;
            }
            let h0 = prof.g((r_lo * r_hi).sqrt());
            if h0 <= 0.0 {
                continue;
            }
            let robust = cdf_h(&prof, h0);
            // direct inversion
            let (mut lo, mut hi) = (r_lo, r_hi);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if prof.g(mid) > h0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let composed = 1.0 - cdf_r(s.population.lambda_b, 0.5 * (lo + hi));
            assert!(
                (robust - composed).abs() < 1e-6,
                "robust {robust} vs composed {composed}"
            );
            checked += 1;
        }
    }

    #[test]
    fn verbatim_switch_returns_literal_composition() {
        let mut cfg = ScenarioConfig::default();
        cfg.compat.verbatim_cdf_h = true;
        let (s, t) = set_up(cfg);
        let (_, prof) = profile_of(&s, &t);
        let (r_lo, r_hi) = prof.support();
        let h0 = prof.g((r_lo * r_hi).sqrt());
        let verbatim = cdf_h(&prof, h0);
        // For decreasing g the literal form is the complement of the robust one.
        let mut cfg2 = s.config().clone();
        cfg2.compat.verbatim_cdf_h = false;
        let (s2, t2) = set_up(cfg2);
        let (_, prof2) = profile_of(&s2, &t2);
        let robust = cdf_h(&prof2, h0);
        assert_relative_eq!(verbatim + robust, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn pointwise_ts_lone_user_no_ambient() {
        // eta = 0, K = 1, I = O = 0: every term vanishes.
        let mut cfg = ScenarioConfig::default();
        cfg.mode = EhMode::Ts { eta: 0.0 };
        let s = validate(cfg).unwrap();
        let local = LocalEnv {
            distance: 50.0,
            util_dl: 0.8,
            gps_share: 1.0,
            bs_interference: 0.0,
            user_power: 0.0,
        };
        assert_eq!(pointwise_received_power(&s, &local), 0.0);
    }

    #[test]
    fn pointwise_sps_full_split_takes_everything() {
        let mut cfg = ScenarioConfig::default();
        cfg.mode = EhMode::Sps { nu: 1.0 };
        let s = validate(cfg).unwrap();
        let local = LocalEnv {
            distance: 80.0,
            util_dl: 0.6,
            gps_share: 0.2,
            bs_interference: 3e-6,
            user_power: 1e-6,
        };
        let p_r = s.radio.tx_power_w * 80f64.powf(-s.radio.alpha);
        let expected = p_r * 0.6 * (s.radio.gain * 0.2 + s.mean_gain() * 0.8) + 4e-6;
        assert_relative_eq!(pointwise_received_power(&s, &local), expected, max_relative = 1e-12);
    }

    #[test]
    fn dps_minus_sps_identity() {
        // DPS - SPS = (1 - nu)(I + O + P D^-a U_d L_g (1 - K)).
        let nu = 0.35;
        let mut a = ScenarioConfig::default();
        a.mode = EhMode::Sps { nu };
        let sa = validate(a).unwrap();
        let mut b = ScenarioConfig::default();
        b.mode = EhMode::Dps { nu };
        let sb = validate(b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let local = LocalEnv {
                distance: rng.gen_range(5.0..500.0),
                util_dl: rng.gen_range(0.0..1.0),
                gps_share: rng.gen_range(0.01..1.0),
                bs_interference: rng.gen_range(0.0..1e-4),
                user_power: rng.gen_range(0.0..1e-4),
            };
            let sps = pointwise_received_power(&sa, &local);
            let dps = pointwise_received_power(&sb, &local);
            let p_r = sa.radio.tx_power_w * local.distance.powf(-sa.radio.alpha);
            let expected = (1.0 - nu)
                * (local.bs_interference
                    + local.user_power
                    + p_r * local.util_dl * sa.mean_gain() * (1.0 - local.gps_share));
            assert_relative_eq!(dps - sps, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn pointwise_expectation_matches_fz_decomposition() {
        // With K -> 0 the F component alone remains; the K-linear part is Z.
        let (s, t) = set_up(ScenarioConfig::default());
        let (perf, prof) = profile_of(&s, &t);
        let r = 90.0;
        let k_ibar = s.radio.reuse_k as f64 * mean_interference(r, &s, perf.u_d.min(1.0));
        let local0 = LocalEnv {
            distance: r,
            util_dl: perf.u_d.min(1.0),
            gps_share: 0.0,
            bs_interference: k_ibar,
            user_power: perf.o_bar,
        };
        assert_relative_eq!(
            pointwise_received_power(&s, &local0),
            prof.f_component(r),
            max_relative = 1e-12
        );
        // slope in K equals Z
        let eps = 1e-6;
        let local1 = LocalEnv {
            gps_share: eps,
            ..local0
        };
        let slope = (pointwise_received_power(&s, &local1) - pointwise_received_power(&s, &local0)) / eps;
        assert_relative_eq!(slope, prof.z_component(r), max_relative = 1e-6);
    }

    #[test]
    fn no_passive_variant_keeps_only_serving_beam() {
        let mut cfg = ScenarioConfig::default();
        cfg.passive_charging = false;
        let (s, t) = set_up(cfg);
        let (perf, prof) = profile_of(&s, &t);
        let r = 70.0;
        assert_eq!(prof.f_component(r), 0.0);
        let eta = s.mode.split();
        let expected =
            perf.u_d.min(1.0) * s.radio.tx_power_w * r.powf(-s.radio.alpha) * s.radio.gain * eta;
        assert_relative_eq!(prof.z_component(r), expected, max_relative = 1e-12);

        // Pointwise: ambient contributions are ignored.
        let local = LocalEnv {
            distance: r,
            util_dl: 0.5,
            gps_share: 0.3,
            bs_interference: 1.0,
            user_power: 1.0,
        };
        let p_r = s.radio.tx_power_w * r.powf(-s.radio.alpha);
        assert_relative_eq!(
            pointwise_received_power(&s, &local),
            p_r * 0.5 * s.radio.gain * eta * 0.3,
            max_relative = 1e-12
        );
    }

    #[test]
    fn sigmoid_profile_bounded_by_h_max() {
        let mut cfg = ScenarioConfig::default();
        cfg.harvest = HarvestCurve::Sigmoid {
            h_max_w: 10e-3,
            h_s_w: 0.064e-3,
            chi_per_w: 274.0,
            iota: 0.9,
        };
        let (s, t) = set_up(cfg);
        let (_, prof) = profile_of(&s, &t);
        let (r_lo, r_hi) = prof.support();
        for i in 0..64 {
            let r = r_lo * ((r_hi / r_lo).ln() * i as f64 / 63.0).exp();
            let g = prof.g(r);
            assert!((0.0..=10e-3 + 1e-15).contains(&g));
        }
    }
}
