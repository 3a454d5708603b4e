//! Analytic user-level performance: Shannon capacity, mean interference,
//! the Palm delay integral H, the downlink interference fixed point, uplink
//! delays, mean received user power, and the maximally fair GPS weight.

use crate::config::{EhMode, RadioParams, ValidatedScenario};
use crate::geometry::{f_of_r, KernelTable};
use crate::{quad, Error, Result};

use std::f64::consts::PI;

/// Mean per-bit delays and utilizations of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    /// Mean ideal per-bit delay of BB users in downlink (s/bit).
    pub tau_d: f64,
    /// Mean ideal per-bit delay of IoT users in downlink (s/bit).
    pub tau_d_iot: f64,
    /// Mean ideal per-bit delay of BB users in uplink (s/bit).
    pub tau_u: f64,
    /// Mean ideal per-bit delay of IoT users in uplink (s/bit).
    pub tau_u_iot: f64,
    /// Raw downlink utilization ratio tau_d / tau_d0, NOT capped at 1.
    pub u_d: f64,
    /// Raw uplink utilization ratio tau_u / tau_u0, NOT capped at 1.
    pub u_u: f64,
    /// Mean power received from user transmissions (W).
    pub o_bar: f64,
    /// Downlink GPS weight of BB users in effect.
    pub w_d: f64,
    /// Fixed-point iterations spent on the downlink delay.
    pub iterations: usize,
    pub converged: bool,
}

/// Downlink GPS weight in effect: the explicit configuration value, or the
/// maximally fair weight for the active EH mode.
pub fn effective_w_d(scen: &ValidatedScenario) -> f64 {
    match scen.scheduling.w_d {
        Some(w) => w,
        None => fair_weight(scen),
    }
}

/// Shannon capacity of a link at distance r (bit/s).
pub fn capacity(r: f64, p: f64, gain: f64, interference: f64, radio: &RadioParams) -> f64 {
    let band = radio.bandwidth_hz / radio.reuse_k as f64;
    let snr = p * gain * r.powf(-radio.alpha) / (radio.noise_power() + interference);
    band * (1.0 + snr).log2()
}

/// Palm mean interference at serving distance r for the given downlink
/// utilization ratio (W).
pub fn mean_interference(r: f64, scen: &ValidatedScenario, util_ratio: f64) -> f64 {
    let radio = &scen.radio;
    let pop = &scen.population;
    radio.tx_power_w * scen.mean_gain() * pop.lambda_b * 2.0 * PI
        * r.powf(2.0 - radio.alpha)
        / (radio.reuse_k as f64 * (radio.alpha - 2.0))
        * util_ratio
}

/// Mean power received from user transmissions at the typical location for
/// the given uplink utilization (W). Independent of user density.
pub fn mean_user_power(scen: &ValidatedScenario, uplink_util: f64) -> f64 {
    let s = &scen.scheduling;
    let p = &scen.population;
    let alpha = scen.radio.alpha;
    let bb = (1.0 - p.iot_fraction) * s.delta_u;
    let iot = p.duty_cycle * p.iot_fraction;
    let mean_tx = (bb * s.ue_power_bb_w + iot * s.ue_power_iot_w) / (bb + iot);
    mean_tx * p.lambda_b * PI * alpha / (alpha - 2.0) * uplink_util
}

/// The Palm delay integral
/// `H(y, z, g) = int_0^inf f(r, y) e^(-lambda_b pi r^2) lambda_b 2 pi r / (z g(r)) dr`.
pub fn h_operator<G: Fn(f64) -> f64>(
    y: f64,
    z: f64,
    g: G,
    scen: &ValidatedScenario,
    table: &KernelTable,
) -> Result<f64> {
    if z <= 0.0 {
        return Err(Error::Divergence(format!(
            "H operator weight z must be positive, got {z}"
        )));
    }
    let r_max = scen.truncation_radius();
    quad::integrate(
        h_integrand(y, z, g, scen, table),
        0.0,
        r_max,
        scen.numerics.quad_rel_tol,
        0.0,
    )
}

fn h_integrand<'a, G: Fn(f64) -> f64 + 'a>(
    y: f64,
    z: f64,
    g: G,
    scen: &'a ValidatedScenario,
    table: &'a KernelTable,
) -> impl Fn(f64) -> f64 + 'a {
    let pop = &scen.population;
    let lambda_b = pop.lambda_b;
    let lambda_u = pop.lambda_u;
    let gamma = pop.iot_fraction;
    let phi = pop.duty_cycle;
    move |r| {
        let f = f_of_r(lambda_u, gamma, phi, y, table.j(r));
        f * (-lambda_b * PI * r * r).exp() * lambda_b * 2.0 * PI * r / (z * g(r))
    }
}

/// Downlink delay solution of the interference fixed point.
///
/// The unknown is the BB delay tau_d of the capacity integral with mean
/// interference proportional to tau_d / tau_d0 (eq. tau_1); the utilization
/// ratio entering the interference is deliberately NOT capped at 1 so that
/// overloaded configurations report their raw overload. The IoT delay is
/// then explicit: `tau_d w_d / (1 - eta)` for time switching, or the z = 1
/// integral over the power-degraded capacity for the splitting modes.
pub fn solve_downlink_delay(
    scen: &ValidatedScenario,
    table: &KernelTable,
) -> Result<(f64, f64, usize)> {
    let w_d = effective_w_d(scen);
    if !(w_d > 0.0) {
        return Err(Error::Divergence(format!(
            "downlink BB GPS weight must be positive, got w_d = {w_d} \
             (time switching with eta = 1 leaves no information time)"
        )));
    }
    let radio = &scen.radio;
    let tau_d0 = scen.qos.tau_d0;
    let num = &scen.numerics;
    let tol = num.fp_tol_factor * tau_d0;
    let r_max = scen.truncation_radius();
    // Interference at unit utilization; scales linearly with tau/tau_d0.
    let i_unit = |r: f64| mean_interference(r, scen, 1.0);

    // Freeze the quadrature mesh on the zero-interference integrand so the
    // iteration map is smooth in tau.
    let mesh = quad::Mesh::adapt(
        h_integrand(
            w_d,
            w_d,
            |r| capacity(r, radio.tx_power_w, radio.gain, 0.0, radio),
            scen,
            table,
        ),
        0.0,
        r_max,
        num.quad_rel_tol * 0.1,
    )?;
    let t_map = |tau: f64| -> f64 {
        let util = tau / tau_d0;
        mesh.integrate(h_integrand(
            w_d,
            w_d,
            |r| capacity(r, radio.tx_power_w, radio.gain, i_unit(r) * util, radio),
            scen,
            table,
        ))
    };

    let mut tau = t_map(0.0);
    let mut iterations = 0usize;
    loop {
        let mapped = t_map(tau);
        if !mapped.is_finite() {
            return Err(Error::Divergence(format!(
                "delay map produced {mapped} at tau = {tau:e}"
            )));
        }
        let residual = (mapped - tau).abs();
        iterations += 1;
        if residual < tol {
            let tau_iot = iot_downlink_delay(scen, table, tau, w_d)?;
            return Ok((tau, tau_iot, iterations));
        }
        if iterations >= num.fp_max_iter {
            return Err(Error::NonConvergence {
                last_tau: tau,
                residual,
                iterations,
            });
        }
        tau = (1.0 - num.fp_damping) * tau + num.fp_damping * mapped;
    }
}

fn iot_downlink_delay(
    scen: &ValidatedScenario,
    table: &KernelTable,
    tau_d: f64,
    w_d: f64,
) -> Result<f64> {
    let radio = &scen.radio;
    match scen.mode {
        EhMode::Ts { eta } => Ok(tau_d * w_d / (1.0 - eta)),
        EhMode::Sps { nu } | EhMode::Dps { nu } => {
            let util = tau_d / scen.qos.tau_d0;
            h_operator(
                w_d,
                1.0,
                |r| {
                    capacity(
                        r,
                        (1.0 - nu) * radio.tx_power_w,
                        radio.gain,
                        (1.0 - nu) * mean_interference(r, scen, util),
                        radio,
                    )
                },
                scen,
                table,
            )
        }
    }
}

/// Uplink delays (BB, IoT). Interference-free, so no fixed point.
pub fn solve_uplink_delay(scen: &ValidatedScenario, table: &KernelTable) -> Result<(f64, f64)> {
    let delta_u = scen.scheduling.delta_u;
    let p_iot = scen.scheduling.ue_power_iot_w;
    let tau_u = h_operator(
        delta_u,
        delta_u,
        |r| capacity(r, p_iot, 1.0, 0.0, &scen.radio),
        scen,
        table,
    )?;
    Ok((tau_u, delta_u * tau_u))
}

/// Maximally fair downlink GPS weight for BB users.
///
/// Time switching: delta_d (1 - eta). Power splitting: delta_d times the
/// capacity ratio of the degraded and clean links at the mean serving
/// distance, with interference at the planning utilization of 1.
pub fn fair_weight(scen: &ValidatedScenario) -> f64 {
    let delta_d = scen.scheduling.delta_d;
    match scen.mode {
        EhMode::Ts { eta } => delta_d * (1.0 - eta),
        EhMode::Sps { nu } | EhMode::Dps { nu } => {
            let radio = &scen.radio;
            let r_mean = 0.5 / scen.population.lambda_b.sqrt();
            let i_bar = mean_interference(r_mean, scen, 1.0);
            let degraded = capacity(
                r_mean,
                (1.0 - nu) * radio.tx_power_w,
                radio.gain,
                (1.0 - nu) * i_bar,
                radio,
            );
            let clean = capacity(r_mean, radio.tx_power_w, radio.gain, i_bar, radio);
            delta_d * degraded / clean
        }
    }
}

/// Solve the full delay model for one scenario.
pub fn evaluate(scen: &ValidatedScenario) -> Result<PerformanceReport> {
    let table = KernelTable::build(scen.population.lambda_b)?;
    evaluate_with_table(scen, &table)
}

pub fn evaluate_with_table(
    scen: &ValidatedScenario,
    table: &KernelTable,
) -> Result<PerformanceReport> {
    let (tau_d, tau_d_iot, iterations) = solve_downlink_delay(scen, table)?;
    let (tau_u, tau_u_iot) = solve_uplink_delay(scen, table)?;
    let u_d = tau_d / scen.qos.tau_d0;
    let u_u = tau_u / scen.qos.tau_u0;
    // A BS cannot receive more than 100% of the time.
    let o_bar = mean_user_power(scen, u_u.min(1.0));
    Ok(PerformanceReport {
        tau_d,
        tau_d_iot,
        tau_u,
        tau_u_iot,
        u_d,
        u_u,
        o_bar,
        w_d: effective_w_d(scen),
        iterations,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate, ScenarioConfig};
    use approx::assert_relative_eq;

    fn scenario() -> ValidatedScenario {
        validate(ScenarioConfig::default()).unwrap()
    }

    #[test]
    fn capacity_zero_power_is_zero() {
        let s = scenario();
        assert_eq!(capacity(100.0, 0.0, 10.0, 0.0, &s.radio), 0.0);
    }

    #[test]
    fn capacity_dies_with_interference() {
        let s = scenario();
        let mut last = f64::INFINITY;
        for i in [0.0, 1e-12, 1e-9, 1e-6, 1e-3] {
            let c = capacity(100.0, 5.0, 10.0, i, &s.radio);
            assert!(c < last);
            last = c;
        }
        assert!(capacity(100.0, 5.0, 10.0, 1e6, &s.radio) < 1e-3);
    }

    #[test]
    fn capacity_spot_value() {
        // Frozen against 50-digit arithmetic (mpmath):
        //   B = 50 MHz, k = 3, alpha = 3, G = 10, P = 5 W, r = 200 m,
        //   N0 = 3.981071705534985e-21 W/Hz (f64 of -174 dBm/Hz), I = 0,
        //   noise power N0 B/k
        //   => C = 441485975.2181820280498 bit/s
        let mut cfg = ScenarioConfig::default();
        cfg.radio.noise_psd = 3.981071705534985e-21;
        let s = validate(cfg).unwrap();
        let c = capacity(200.0, 5.0, 10.0, 0.0, &s.radio);
        assert_relative_eq!(c, 441485975.2181820280498, max_relative = 1e-12);
    }

    #[test]
    fn raw_noise_switch() {
        let mut cfg = ScenarioConfig::default();
        cfg.radio.raw_noise = true;
        let s = validate(cfg).unwrap();
        assert_eq!(s.radio.noise_power(), s.radio.noise_psd);
    }

    #[test]
    fn interference_examples() {
        // util 0 silences the network.
        let s = scenario();
        assert_eq!(mean_interference(100.0, &s, 0.0), 0.0);

        // P=5, L_g=1, lambda_b=1e-5, r=100, alpha=3, k=3 -> ~1.047e-6 W.
        let mut cfg = ScenarioConfig::default();
        cfg.radio.gain = 1.0;
        cfg.radio.side_lobe_override = None; // L = 1, L_g = 1
        cfg.population.lambda_b = 1e-5;
        let s = validate(cfg).unwrap();
        let i = mean_interference(100.0, &s, 1.0);
        assert_relative_eq!(i, 5.0 * 1e-5 * 2.0 * PI * 0.01 / 3.0, max_relative = 1e-12);
        assert!((i - 1.047e-6).abs() < 1e-9);

        // Doubling the reuse factor halves the per-band interference.
        let mut cfg6 = s.config().clone();
        cfg6.radio.reuse_k = 6;
        let s6 = validate(cfg6).unwrap();
        assert_relative_eq!(
            mean_interference(100.0, &s6, 1.0),
            i / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn user_power_examples() {
        // gamma=0.8, phi=1, delta_u=1, P_bb=P_I=0.2, lambda_b=1e-5, alpha=3.
        let mut cfg = ScenarioConfig::default();
        cfg.population.lambda_b = 1e-5;
        let s = validate(cfg).unwrap();
        let o = mean_user_power(&s, 1.0);
        assert_relative_eq!(o, 0.2 * 1e-5 * PI * 3.0, max_relative = 1e-12);
        assert!((o - 1.885e-5).abs() < 1e-8);
        assert_eq!(mean_user_power(&s, 0.0), 0.0);

        // gamma = 0 reduces to the BB-only expression.
        let mut cfg = ScenarioConfig::default();
        cfg.population.iot_fraction = 0.0;
        cfg.scheduling.ue_power_bb_w = 0.37;
        let s = validate(cfg).unwrap();
        let alpha = s.radio.alpha;
        assert_relative_eq!(
            mean_user_power(&s, 0.5),
            0.37 * s.population.lambda_b * PI * alpha / (alpha - 2.0) * 0.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn user_power_independent_of_lambda_u() {
        // The formula contains no lambda_u; outputs must be bitwise equal.
        let mut a = ScenarioConfig::default();
        a.population.lambda_u = 1e-4;
        let mut b = ScenarioConfig::default();
        b.population.lambda_u = 1e-1;
        let oa = mean_user_power(&validate(a).unwrap(), 0.7);
        let ob = mean_user_power(&validate(b).unwrap(), 0.7);
        assert_eq!(oa.to_bits(), ob.to_bits());
    }

    #[test]
    fn h_operator_scales_inversely_with_z_and_g() {
        let s = scenario();
        let table = KernelTable::build(s.population.lambda_b).unwrap();
        let h1 = h_operator(2.0, 1.0, |_| 1e6, &s, &table).unwrap();
        let h2 = h_operator(2.0, 2.0, |_| 1e6, &s, &table).unwrap();
        let h3 = h_operator(2.0, 1.0, |_| 2e6, &s, &table).unwrap();
        assert_relative_eq!(h1 / h2, 2.0, max_relative = 1e-9);
        assert_relative_eq!(h1 / h3, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn h_operator_matches_refined_grid() {
        // Full downlink integrand vs a 10x tighter tolerance.
        let s = scenario();
        let table = KernelTable::build(s.population.lambda_b).unwrap();
        let g = |r: f64| capacity(r, 5.0, 10.0, mean_interference(r, &s, 0.8), &s.radio);
        let coarse = h_operator(10.0, 10.0, g, &s, &table).unwrap();
        let mut tight_cfg = s.config().clone();
        tight_cfg.numerics.quad_rel_tol = 1e-8;
        let tight_s = validate(tight_cfg).unwrap();
        let fine = h_operator(10.0, 10.0, g, &tight_s, &table).unwrap();
        assert_relative_eq!(coarse, fine, max_relative = 1e-4);
    }

    #[test]
    fn downlink_fixed_point_converges_and_satisfies_residual() {
        let s = scenario();
        let table = KernelTable::build(s.population.lambda_b).unwrap();
        let (tau, _, iters) = solve_downlink_delay(&s, &table).unwrap();
        assert!(tau > 0.0);
        assert!(iters < s.numerics.fp_max_iter);

        // Residual check with an independent adaptive evaluation: the fixed
        // point sits within quadrature accuracy of T(tau).
        let w_d = effective_w_d(&s);
        let util = tau / s.qos.tau_d0;
        let mapped = h_operator(
            w_d,
            w_d,
            |r| {
                capacity(
                    r,
                    s.radio.tx_power_w,
                    s.radio.gain,
                    mean_interference(r, &s, util),
                    &s.radio,
                )
            },
            &s,
            &table,
        )
        .unwrap();
        assert_relative_eq!(mapped, tau, max_relative = 1e-5);
    }

    #[test]
    fn delay_map_is_monotone_in_tau() {
        // More delay -> more utilization -> more interference -> more delay.
        let s = scenario();
        let table = KernelTable::build(s.population.lambda_b).unwrap();
        let w_d = effective_w_d(&s);
        let t = |tau: f64| {
            h_operator(
                w_d,
                w_d,
                |r| {
                    capacity(
                        r,
                        s.radio.tx_power_w,
                        s.radio.gain,
                        mean_interference(r, &s, tau / s.qos.tau_d0),
                        &s.radio,
                    )
                },
                &s,
                &table,
            )
            .unwrap()
        };
        let taus = [0.0, 2e-6, 5e-6, 1e-5, 3e-5];
        let mapped: Vec<f64> = taus.iter().map(|&x| t(x)).collect();
        for w in mapped.windows(2) {
            assert!(w[1] > w[0], "T not increasing: {mapped:?}");
        }
    }

    #[test]
    fn ts_iot_delay_relation_exact() {
        let s = scenario();
        let r = evaluate(&s).unwrap();
        let eta = s.mode.split();
        assert_eq!(r.tau_d_iot.to_bits(), (r.tau_d * r.w_d / (1.0 - eta)).to_bits());
        assert_eq!(r.tau_u_iot.to_bits(), (s.scheduling.delta_u * r.tau_u).to_bits());
    }

    #[test]
    fn iot_delay_reduction_with_all_iot_population() {
        // gamma = 1, phi = 1, eta = 0, explicit w_d = delta_d:
        // tau_dI = tau_d * delta_d.
        let mut cfg = ScenarioConfig::default();
        cfg.population.iot_fraction = 1.0;
        cfg.mode = EhMode::Ts { eta: 0.0 };
        cfg.scheduling.w_d = Some(cfg.scheduling.delta_d);
        let s = validate(cfg).unwrap();
        let r = evaluate(&s).unwrap();
        assert_relative_eq!(r.tau_d_iot, r.tau_d * s.scheduling.delta_d, max_relative = 1e-12);
    }

    #[test]
    fn sps_at_zero_split_equals_ts_at_zero_split() {
        let mut a = ScenarioConfig::default();
        a.mode = EhMode::Ts { eta: 0.0 };
        a.scheduling.w_d = Some(40.0);
        let mut b = a.clone();
        b.mode = EhMode::Sps { nu: 0.0 };
        let ra = evaluate(&validate(a).unwrap()).unwrap();
        let rb = evaluate(&validate(b).unwrap()).unwrap();
        assert_relative_eq!(ra.tau_d, rb.tau_d, max_relative = 1e-9);
        assert_relative_eq!(ra.tau_d_iot, rb.tau_d_iot, max_relative = 1e-6);
    }

    #[test]
    fn uplink_monotone_in_ue_power() {
        let s = scenario();
        let table = KernelTable::build(s.population.lambda_b).unwrap();
        let (tau_full, _) = solve_uplink_delay(&s, &table).unwrap();
        let mut cfg = s.config().clone();
        cfg.scheduling.ue_power_iot_w = 0.1;
        let s_half = validate(cfg).unwrap();
        let (tau_half, _) = solve_uplink_delay(&s_half, &table).unwrap();
        assert!(tau_half > tau_full);
    }

    #[test]
    fn uplink_iot_delay_identity() {
        let mut cfg = ScenarioConfig::default();
        cfg.scheduling.delta_u = 1.0;
        let s = validate(cfg).unwrap();
        let table = KernelTable::build(s.population.lambda_b).unwrap();
        let (tau_u, tau_u_iot) = solve_uplink_delay(&s, &table).unwrap();
        assert_eq!(tau_u.to_bits(), tau_u_iot.to_bits());
    }

    #[test]
    fn fair_weight_examples() {
        // TS with eta = 0.
        let mut cfg = ScenarioConfig::default();
        cfg.mode = EhMode::Ts { eta: 0.0 };
        let s = validate(cfg).unwrap();
        assert_relative_eq!(fair_weight(&s), s.scheduling.delta_d);

        // PS with nu = 0: identical logs.
        let mut cfg = ScenarioConfig::default();
        cfg.mode = EhMode::Sps { nu: 0.0 };
        let s = validate(cfg).unwrap();
        assert_relative_eq!(fair_weight(&s), s.scheduling.delta_d, max_relative = 1e-12);

        // PS with nu = 0.5: splitting strictly reduces the IoT rate, so the
        // fair weight strictly shrinks.
        let mut cfg = ScenarioConfig::default();
        cfg.mode = EhMode::Dps { nu: 0.5 };
        let s = validate(cfg).unwrap();
        assert!(fair_weight(&s) < s.scheduling.delta_d);
        assert!(fair_weight(&s) > 0.0);
    }

    #[test]
    fn eta_one_reports_divergence() {
        let mut cfg = ScenarioConfig::default();
        cfg.mode = EhMode::Ts { eta: 1.0 };
        let s = validate(cfg).unwrap();
        let table = KernelTable::build(s.population.lambda_b).unwrap();
        assert!(matches!(
            solve_downlink_delay(&s, &table),
            Err(Error::Divergence(_))
        ));
    }
}
