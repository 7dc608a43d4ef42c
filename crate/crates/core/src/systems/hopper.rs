//! Vertical F-SLIP hopper with an apex-to-apex return map.
//!
//! Flight is ballistic. During stance the leg is a damped linear spring,
//!
//! ```text
//! m ÿ = -m g + k (r0 - y) - c ẏ + F·[ẏ > 0]
//! ```
//!
//! with the constant thrust `F` active while the leg extends. A force that
//! acts over the whole stance does no net work, so the thrust is gated on
//! extension; otherwise the map has no fixed point.
//!
//! Stance is integrated with fixed-step RK4. Turnaround (`ẏ = 0`), liftoff
//! (`y = r0`) and bottom-out (`y = 0`) are located by bisection on the
//! partial step.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{StateVector, StepOutcome};

use super::ReturnMapSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HopperParams {
    /// kg
    pub mass: f64,
    /// m
    pub rest_length: f64,
    /// N/m
    pub stiffness: f64,
    /// N·s/m
    pub damping: f64,
    /// N, applied during leg extension
    pub thrust: f64,
    /// m/s²
    pub gravity: f64,
    /// Apex heights at or below this absorb (m).
    pub lower_bound: f64,
    /// Apex heights at or above this absorb (m).
    pub upper_bound: f64,
    /// RK4 step (s).
    pub time_step: f64,
    /// Event localization tolerance (s).
    pub event_tolerance: f64,
    /// Stance longer than this counts as a stall (s).
    pub max_stance_time: f64,
}

impl Default for HopperParams {
    /// Calibrated defaults: stable fixed point near 1.287 m with return-map
    /// slope near 0.886.
    fn default() -> Self {
        Self {
            mass: 1.0,
            rest_length: 1.0,
            stiffness: 8000.0,
            damping: 7.0,
            thrust: 26.0,
            gravity: 9.81,
            lower_bound: 0.4,
            upper_bound: 1.5,
            time_step: 1e-4,
            event_tolerance: 1e-10,
            max_stance_time: 10.0,
        }
    }
}

impl HopperParams {
    /// Lossless spring: no damping, no thrust.
    pub fn conservative() -> Self {
        Self {
            damping: 0.0,
            thrust: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("rest_length", self.rest_length),
            ("stiffness", self.stiffness),
            ("gravity", self.gravity),
            ("time_step", self.time_step),
            ("event_tolerance", self.event_tolerance),
            ("max_stance_time", self.max_stance_time),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!(
                    "hopper {name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [("damping", self.damping), ("thrust", self.thrust)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!(
                    "hopper {name} must be nonnegative, got {v}"
                )));
            }
        }
        if !(self.lower_bound < self.upper_bound) || self.lower_bound < 0.0 {
            return Err(Error::Parameter(format!(
                "hopper bounds must satisfy 0 <= lower < upper, got [{}, {}]",
                self.lower_bound, self.upper_bound
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StanceOutcome {
    Liftoff {
        velocity: f64,
        duration: f64,
    },
    /// The body reached the ground (`y = 0`).
    BottomOut,
    /// No liftoff within `max_stance_time`.
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Compression,
    Extension,
}

#[derive(Debug, Clone, Copy)]
struct Stance {
    y: f64,
    v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    Turn,
    Liftoff,
    BottomOut,
}

impl Event {
    fn triggered(self, phase: Phase, s: &Stance, r0: f64) -> bool {
        match (self, phase) {
            (Event::Turn, Phase::Compression) => s.v > 0.0,
            (Event::Turn, Phase::Extension) => s.v < 0.0,
            (Event::Liftoff, _) => s.y >= r0,
            (Event::BottomOut, _) => s.y <= 0.0,
        }
    }
}

fn accel(p: &HopperParams, phase: Phase, y: f64, v: f64) -> f64 {
    let thrust = match phase {
        Phase::Extension => p.thrust,
        Phase::Compression => 0.0,
    };
    -p.gravity + (p.stiffness * (p.rest_length - y) - p.damping * v + thrust) / p.mass
}

fn rk4(p: &HopperParams, phase: Phase, s: Stance, h: f64) -> Stance {
    let f = |y: f64, v: f64| (v, accel(p, phase, y, v));
    let (k1y, k1v) = f(s.y, s.v);
    let (k2y, k2v) = f(s.y + 0.5 * h * k1y, s.v + 0.5 * h * k1v);
    let (k3y, k3v) = f(s.y + 0.5 * h * k2y, s.v + 0.5 * h * k2v);
    let (k4y, k4v) = f(s.y + h * k3y, s.v + h * k3v);
    Stance {
        y: s.y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        v: s.v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    }
}

/// Shortest sub-step in `(0, h]` after which `event` fires, to within `tol`.
/// Returns the step length and the state just past the event.
fn locate(p: &HopperParams, phase: Phase, start: Stance, h: f64, event: Event) -> (f64, Stance) {
    let mut lo = 0.0;
    let mut hi = h;
    let mut hi_state = rk4(p, phase, start, h);
    while hi - lo > p.event_tolerance {
        let mid = 0.5 * (lo + hi);
        let s = rk4(p, phase, start, mid);
        if event.triggered(phase, &s, p.rest_length) {
            hi = mid;
            hi_state = s;
        } else {
            lo = mid;
        }
    }
    (hi, hi_state)
}

/// Integrates stance from touchdown (`y0 = r0`, `v0 < 0`) to liftoff.
pub fn integrate_stance(params: &HopperParams, y0: f64, v0: f64) -> Result<StanceOutcome> {
    params.validate()?;
    if (y0 - params.rest_length).abs() > 1e-12 * params.rest_length.max(1.0) {
        return Err(Error::Domain(format!(
            "stance must start at touchdown y0 = r0 = {}, got {y0}",
            params.rest_length
        )));
    }
    if !(v0 < 0.0) || !v0.is_finite() {
        return Err(Error::Domain(format!(
            "touchdown velocity must be negative, got {v0}"
        )));
    }

    let r0 = params.rest_length;
    let h = params.time_step;
    let mut phase = Phase::Compression;
    let mut s = Stance { y: y0, v: v0 };
    let mut t = 0.0;

    while t < params.max_stance_time {
        let next = rk4(params, phase, s, h);
        if !(next.y.is_finite() && next.v.is_finite()) {
            return Err(Error::Integration(format!(
                "non-finite stance state at t = {t}"
            )));
        }
        let candidates: &[Event] = match phase {
            Phase::Compression => &[Event::BottomOut, Event::Turn],
            Phase::Extension => &[Event::Liftoff, Event::Turn],
        };
        let mut earliest: Option<(f64, Stance, Event)> = None;
        for &ev in candidates {
            if ev.triggered(phase, &next, r0) {
                let (tau, state) = locate(params, phase, s, h, ev);
                if earliest.is_none_or(|(best, _, _)| tau < best) {
                    earliest = Some((tau, state, ev));
                }
            }
        }
        match earliest {
            None => {
                s = next;
                t += h;
            }
            Some((tau, state, ev)) => {
                t += tau;
                match ev {
                    Event::BottomOut => return Ok(StanceOutcome::BottomOut),
                    Event::Liftoff => {
                        if !(state.v > 0.0) {
                            return Err(Error::Integration(
                                "liftoff located with nonpositive velocity".into(),
                            ));
                        }
                        return Ok(StanceOutcome::Liftoff {
                            velocity: state.v,
                            duration: t,
                        });
                    }
                    Event::Turn => {
                        phase = match phase {
                            Phase::Compression => Phase::Extension,
                            Phase::Extension => Phase::Compression,
                        };
                        s = state;
                    }
                }
            }
        }
    }
    Ok(StanceOutcome::Stalled)
}

/// Apex-to-apex map with impact-velocity noise `w` (m/s).
pub fn hopper_apex_map(params: &HopperParams, y_apex: f64, w: f64) -> Result<StepOutcome> {
    let r0 = params.rest_length;
    if !(y_apex > r0) || !y_apex.is_finite() {
        return Err(Error::Domain(format!(
            "apex height {y_apex} m leaves no flight phase above r0 = {r0} m"
        )));
    }
    let touchdown = -(2.0 * params.gravity * (y_apex - r0)).sqrt();
    let v0 = touchdown + w;
    if !(v0 < 0.0) {
        // Noise cancelled the impact: the leg never loads.
        return Ok(StepOutcome::Absorbed);
    }
    match integrate_stance(params, r0, v0)? {
        StanceOutcome::Liftoff { velocity, .. } => {
            let next = r0 + velocity * velocity / (2.0 * params.gravity);
            if next <= params.lower_bound || next >= params.upper_bound {
                Ok(StepOutcome::Absorbed)
            } else {
                Ok(StepOutcome::Alive(DVector::from_element(1, next)))
            }
        }
        StanceOutcome::BottomOut | StanceOutcome::Stalled => Ok(StepOutcome::Absorbed),
    }
}

/// Stable deterministic fixed point of the apex map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub apex: f64,
    pub slope: f64,
}

const CALIBRATION_SCAN_CELLS: usize = 220;

/// Scans apex heights on the grid, bisects the first stable crossing of
/// `map(y) - y`, and rejects parameter sets without a fixed point of slope
/// magnitude below one.
pub fn calibrate(params: &HopperParams) -> Result<FixedPoint> {
    params.validate()?;
    let gap = |y: f64| -> Option<f64> {
        match hopper_apex_map(params, y, 0.0) {
            Ok(StepOutcome::Alive(x)) => Some(x[0] - y),
            _ => None,
        }
    };
    let width = (params.upper_bound - params.lower_bound) / CALIBRATION_SCAN_CELLS as f64;
    let samples: Vec<(f64, Option<f64>)> = (0..CALIBRATION_SCAN_CELLS)
        .map(|i| params.lower_bound + (i as f64 + 0.5) * width)
        .filter(|&y| y > params.rest_length)
        .map(|y| (y, gap(y)))
        .collect();

    for pair in samples.windows(2) {
        let ((mut lo, Some(g_lo)), (mut hi, Some(g_hi))) = (pair[0], pair[1]) else {
            continue;
        };
        if !(g_lo >= 0.0 && g_hi < 0.0) {
            continue;
        }
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            match gap(mid) {
                Some(g) if g >= 0.0 => lo = mid,
                Some(_) => hi = mid,
                None => break,
            }
        }
        let apex = 0.5 * (lo + hi);
        let h = 1e-6;
        let slope = match (gap(apex + h), gap(apex - h)) {
            (Some(a), Some(b)) => (a - b) / (2.0 * h) + 1.0,
            _ => continue,
        };
        if slope.abs() < 1.0 {
            return Ok(FixedPoint { apex, slope });
        }
    }
    Err(Error::Parameter(
        "hopper parameters have no stable fixed point inside the grid".into(),
    ))
}

/// The hopper as a one-dimensional return map over apex height.
#[derive(Debug, Clone)]
pub struct Hopper {
    params: HopperParams,
    reference: f64,
}

impl Hopper {
    /// The reference state is the calibrated fixed point when one exists,
    /// otherwise the middle of the bounds.
    pub fn new(params: HopperParams) -> Result<Self> {
        params.validate()?;
        let reference = calibrate(&params)
            .map(|fp| fp.apex)
            .unwrap_or(0.5 * (params.lower_bound + params.upper_bound));
        Ok(Self { params, reference })
    }

    pub fn params(&self) -> &HopperParams {
        &self.params
    }
}

impl ReturnMapSystem for Hopper {
    fn name(&self) -> &str {
        "hopper"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &StateVector, w: &DVector<f64>) -> StepOutcome {
        // Apex heights without a flight phase cannot hop again.
        hopper_apex_map(&self.params, x[0], w[0]).unwrap_or(StepOutcome::Absorbed)
    }

    fn reference_state(&self) -> StateVector {
        DVector::from_element(1, self.reference)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn liftoff(p: &HopperParams, v0: f64) -> f64 {
        match integrate_stance(p, p.rest_length, v0).unwrap() {
            StanceOutcome::Liftoff { velocity, .. } => velocity,
            other => panic!("expected liftoff, got {other:?}"),
        }
    }

    fn apex(y: f64) -> f64 {
        (2.0 * 9.81 * (y - 1.0)).sqrt()
    }

    #[test]
    fn conservative_spring_returns_speed() {
        let p = HopperParams::conservative();
        for v0 in [-0.3, -1.0, -2.5] {
            assert!((liftoff(&p, v0) + v0).abs() < 1e-8, "v0 = {v0}");
        }
    }

    #[test]
    fn damping_dissipates() {
        let p = HopperParams {
            damping: 5.0,
            thrust: 0.0,
            ..HopperParams::default()
        };
        assert!(liftoff(&p, -1.0).abs() < 1.0);
    }

    #[test]
    fn stance_preconditions() {
        let p = HopperParams::default();
        assert!(matches!(
            integrate_stance(&p, 0.9, -1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            integrate_stance(&p, 1.0, 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn heavy_load_bottoms_out() {
        let p = HopperParams {
            stiffness: 10.0,
            damping: 0.0,
            thrust: 0.0,
            ..HopperParams::default()
        };
        assert_eq!(
            integrate_stance(&p, 1.0, -3.0).unwrap(),
            StanceOutcome::BottomOut
        );
    }

    #[test]
    fn overdamped_leg_stalls() {
        let p = HopperParams {
            damping: 2000.0,
            thrust: 0.0,
            max_stance_time: 2.0,
            ..HopperParams::default()
        };
        assert_eq!(
            integrate_stance(&p, 1.0, -0.5).unwrap(),
            StanceOutcome::Stalled
        );
    }

    #[test]
    fn lossless_map_is_identity() {
        let p = HopperParams::conservative();
        let out = hopper_apex_map(&p, 1.2, 0.0).unwrap();
        assert!((out.alive().unwrap()[0] - 1.2).abs() < 1e-8);
    }

    #[test]
    fn apex_without_flight_is_domain_error() {
        let p = HopperParams::default();
        assert!(matches!(
            hopper_apex_map(&p, 1.0, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            hopper_apex_map(&p, 0.7, 0.0),
            Err(Error::Domain(_))
        ));
        let h = Hopper::new(p).unwrap();
        assert!(h
            .step(&DVector::from_element(1, 0.7), &DVector::zeros(1))
            .is_absorbed());
    }

    #[test]
    fn cancelled_impact_absorbs() {
        let p = HopperParams::default();
        let out = hopper_apex_map(&p, 1.2, apex(1.2)).unwrap();
        match out {
            StepOutcome::Absorbed => {}
            StepOutcome::Alive(x) => assert!(x[0] < 0.4),
        }
    }

    #[test]
    fn calibrated_defaults_have_fixed_point() {
        let p = HopperParams::default();
        let fp = calibrate(&p).unwrap();
        assert!(fp.apex > p.rest_length && fp.apex < p.upper_bound);
        assert!(fp.slope.abs() < 1.0);
        let image = hopper_apex_map(&p, fp.apex, 0.0).unwrap();
        assert!((image.alive().unwrap()[0] - fp.apex).abs() < 1e-9);
    }

    #[test]
    fn purely_dissipative_parameters_rejected() {
        let p = HopperParams {
            thrust: 0.0,
            damping: 3.0,
            ..HopperParams::default()
        };
        assert!(calibrate(&p).is_err());
    }

    #[test]
    fn dissipation_lowers_apex_every_step() {
        let p = HopperParams {
            thrust: 0.0,
            damping: 3.0,
            ..HopperParams::default()
        };
        let mut y = 1.45;
        for _ in 0..50 {
            match hopper_apex_map(&p, y, 0.0) {
                Ok(StepOutcome::Alive(x)) => {
                    assert!(x[0] < y);
                    y = x[0];
                }
                _ => return,
            }
        }
    }

    #[test]
    fn step_is_bitwise_deterministic() {
        let h = Hopper::new(HopperParams::default()).unwrap();
        let x = DVector::from_element(1, 1.31);
        let w = DVector::from_element(1, 0.137);
        let first = h.step(&x, &w);
        for _ in 0..1000 {
            assert_eq!(h.step(&x, &w), first);
        }
    }

    #[test]
    fn error_decays_at_fourth_order() {
        // Log-log slope of the liftoff-speed error against a much finer run.
        let v0 = -apex(1.3);
        let at = |dt: f64| {
            liftoff(
                &HopperParams {
                    time_step: dt,
                    ..HopperParams::default()
                },
                v0,
            )
        };
        let truth = at(1e-5);
        let steps: [f64; 4] = [1e-3, 5e-4, 2.5e-4, 1.25e-4];
        let pts: Vec<(f64, f64)> = steps
            .iter()
            .map(|&dt| (dt.ln(), (at(dt) - truth).abs().ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!(slope > 3.0 && slope < 5.5, "slope {slope}");
    }

    /// Independent reference: RK4 at 1e-6 s with secant-located switching.
    fn reference_liftoff(p: &HopperParams, v0: f64) -> f64 {
        let h = 1e-6;
        let r0 = p.rest_length;
        let acc = |y: f64, v: f64, ext: bool| {
            -p.gravity
                + (p.stiffness * (r0 - y) - p.damping * v + if ext { p.thrust } else { 0.0 })
                    / p.mass
        };
        let step = |y: f64, v: f64, ext: bool, h: f64| {
            let k1 = (v, acc(y, v, ext));
            let k2 = (
                v + 0.5 * h * k1.1,
                acc(y + 0.5 * h * k1.0, v + 0.5 * h * k1.1, ext),
            );
            let k3 = (
                v + 0.5 * h * k2.1,
                acc(y + 0.5 * h * k2.0, v + 0.5 * h * k2.1, ext),
            );
            let k4 = (v + h * k3.1, acc(y + h * k3.0, v + h * k3.1, ext));
            (
                y + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
                v + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            )
        };
        let (mut y, mut v) = (r0, v0);
        let mut ext = false;
        loop {
            let (ny, nv) = step(y, v, ext, h);
            if !ext && nv > 0.0 {
                let frac = -v / (nv - v);
                let (sy, sv) = step(y, v, false, frac * h);
                y = sy;
                v = sv.max(0.0);
                ext = true;
                continue;
            }
            if ext && ny >= r0 {
                let frac = (r0 - y) / (ny - y);
                let (_, sv) = step(y, v, true, frac * h);
                return sv;
            }
            y = ny;
            v = nv;
        }
    }

    #[test]
    fn liftoff_matches_fine_reference() {
        let p = HopperParams::default();
        for y_apex in [1.2, 1.3] {
            let v0 = -apex(y_apex);
            let ours = liftoff(&p, v0);
            let reference = reference_liftoff(&p, v0);
            assert!((ours - reference).abs() < 1e-6, "{ours} vs {reference}");
        }
    }
}
