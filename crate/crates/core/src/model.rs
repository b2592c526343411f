//! Neuron and synapse kernels: Izhikevich membrane dynamics with reset, and
//! the delay-corrected STDP rule.
//!
//! All functions are pure; the engine calls them per neuron and per synapse.

use crate::error::{Error, Result};
use crate::math;

/// Parameters of the two-variable Izhikevich model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IzhikevichParams {
    pub a: f64,
    pub b: f64,
    /// Reset potential (mV).
    pub c: f64,
    /// Recovery increment applied on reset.
    pub d: f64,
    /// Spike threshold (mV).
    pub v_peak: f64,
}

impl IzhikevichParams {
    /// Regular spiking (excitatory).
    pub const RS: Self = Self { a: 0.02, b: 0.2, c: -65.0, d: 8.0, v_peak: 30.0 };
    /// Fast spiking (inhibitory).
    pub const FS: Self = Self { a: 0.1, b: 0.2, c: -65.0, d: 2.0, v_peak: 30.0 };

    pub fn validate(&self) -> Result<()> {
        let all = [self.a, self.b, self.c, self.d, self.v_peak];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("izhikevich", "parameters must be finite"));
        }
        if self.v_peak <= self.c {
            return Err(Error::config("v_peak", "must exceed the reset potential c"));
        }
        Ok(())
    }

    /// Resting state used at network start: `v = c`, `u = b * c`.
    pub fn rest_state(&self) -> NeuronState {
        NeuronState { v: self.c, u: self.b * self.c, last_spike_time: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    /// Membrane potential (mV).
    pub v: f64,
    /// Recovery variable.
    pub u: f64,
    /// Time of the most recent spike (ms), `None` if the neuron never fired.
    pub last_spike_time: Option<f64>,
}

/// STDP amplitudes, time constants, weight bounds and consolidation period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdpParams {
    pub a_plus: f64,
    /// Peak depression; negative.
    pub a_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
    pub w_min: f64,
    pub w_max: f64,
    /// Milliseconds between two weight consolidations.
    pub consolidation_period: u32,
}

impl Default for StdpParams {
    fn default() -> Self {
        Self {
            a_plus: 0.1,
            a_minus: -0.12,
            tau_plus: 20.0,
            tau_minus: 20.0,
            w_min: 0.0,
            w_max: 10.0,
            consolidation_period: 1000,
        }
    }
}

impl StdpParams {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.a_plus > 0.0) {
            return Err(Error::config("a_plus", "must be > 0"));
        }
        if !(self.a_minus < 0.0) {
            return Err(Error::config("a_minus", "must be < 0"));
        }
        if !(self.tau_plus > 0.0) {
            return Err(Error::config("tau_plus", "must be > 0"));
        }
        if !(self.tau_minus > 0.0) {
            return Err(Error::config("tau_minus", "must be > 0"));
        }
        if !(self.w_min <= self.w_max) {
            return Err(Error::config("w_min", "must not exceed w_max"));
        }
        if self.consolidation_period == 0 {
            return Err(Error::config("consolidation_period", "must be > 0"));
        }
        Ok(())
    }
}

/// One explicit-Euler substep of the sub-threshold dynamics.
///
/// `v' = v + dt (0.04 v^2 + 5 v + 140 - u + input)`, `u' = u + dt a (b v - u)`.
/// No reset is applied; callers check the threshold with [`fire_and_reset`].
#[inline]
pub fn membrane_substep(
    state: NeuronState,
    params: &IzhikevichParams,
    input: f64,
    dt: f64,
) -> Result<NeuronState> {
    let NeuronState { v, u, .. } = state;
    let dv = 0.04 * v * v + 5.0 * v + 140.0 - u + input;
    let du = params.a * (params.b * v - u);
    let next_v = v + dt * dv;
    let next_u = u + dt * du;
    if !(next_v.is_finite() && next_u.is_finite()) {
        return Err(Error::NumericDivergence { gid: None, t: None });
    }
    Ok(NeuronState { v: next_v, u: next_u, last_spike_time: state.last_spike_time })
}

/// Applies the spike reset when `v >= v_peak`.
#[inline]
pub fn fire_and_reset(state: NeuronState, params: &IzhikevichParams, t_now: f64) -> (NeuronState, bool) {
    if state.v >= params.v_peak {
        let reset = NeuronState { v: params.c, u: state.u + params.d, last_spike_time: Some(t_now) };
        (reset, true)
    } else {
        (state, false)
    }
}

/// Weight change for a pre/post pairing, with `t = t_post - t_pre - d_axon`.
///
/// Non-negative `t` (arrival at or before the post spike) potentiates, negative
/// `t` depresses.
#[inline]
pub fn stdp_delta(t_post: f64, t_pre: f64, d_axon: f64, params: &StdpParams) -> f64 {
    let t = t_post - t_pre - d_axon;
    if t >= 0.0 {
        params.a_plus * math::exp(-(t / params.tau_plus))
    } else {
        params.a_minus * math::exp(t / params.tau_minus)
    }
}

/// Folds the accumulated change into the weight, clipped to `[w_min, w_max]`.
#[inline]
pub fn consolidate_weight(w: f64, accumulated_delta: f64, params: &StdpParams) -> f64 {
    (w + accumulated_delta).clamp(params.w_min, params.w_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(v: f64, u: f64) -> NeuronState {
        NeuronState { v, u, last_spike_time: None }
    }

    #[test]
    fn presets() {
        let rs = IzhikevichParams::RS;
        assert_eq!((rs.a, rs.b, rs.c, rs.d, rs.v_peak), (0.02, 0.2, -65.0, 8.0, 30.0));
        let fs = IzhikevichParams::FS;
        assert_eq!((fs.a, fs.b, fs.c, fs.d, fs.v_peak), (0.1, 0.2, -65.0, 2.0, 30.0));
        assert!(rs.validate().is_ok() && fs.validate().is_ok());
        let bad = IzhikevichParams { v_peak: -70.0, ..rs };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn substep_hand_values() {
        let rs = IzhikevichParams::RS;
        let s = membrane_substep(st(-65.0, -13.0), &rs, 0.0, 0.5).unwrap();
        assert!((s.v - -66.5).abs() < 1e-12, "{}", s.v);
        assert!((s.u - -13.0).abs() < 1e-12);
        let s = membrane_substep(st(-65.0, -13.0), &rs, 3.0, 0.5).unwrap();
        assert!((s.v - -65.0).abs() < 1e-12, "{}", s.v);
        assert!((s.u - -13.0).abs() < 1e-12);
    }

    #[test]
    fn substep_zero_dt_is_identity() {
        let s0 = st(-42.5, 3.25);
        let s = membrane_substep(s0, &IzhikevichParams::FS, 17.0, 0.0).unwrap();
        assert_eq!(s, s0);
    }

    #[test]
    fn substep_non_finite_is_error() {
        let rs = IzhikevichParams::RS;
        assert!(matches!(
            membrane_substep(st(-65.0, 0.0), &rs, f64::NAN, 0.5),
            Err(Error::NumericDivergence { .. })
        ));
        assert!(membrane_substep(st(1e200, 0.0), &rs, 0.0, 0.5).is_err());
    }

    #[test]
    fn reset_rule() {
        let rs = IzhikevichParams::RS;
        let (s, fired) = fire_and_reset(st(31.0, 0.0), &rs, 10.0);
        assert!(fired);
        assert_eq!(s, NeuronState { v: -65.0, u: 8.0, last_spike_time: Some(10.0) });

        let (s, fired) = fire_and_reset(st(29.9, 0.0), &rs, 10.0);
        assert!(!fired);
        assert_eq!(s, st(29.9, 0.0));

        let (s, fired) = fire_and_reset(st(30.0, -5.0), &IzhikevichParams::FS, 0.0);
        assert!(fired);
        assert_eq!(s, NeuronState { v: -65.0, u: -3.0, last_spike_time: Some(0.0) });
    }

    #[test]
    fn stdp_closed_form() {
        let p = StdpParams::default();
        // t = t_post - t_pre - d
        assert_eq!(stdp_delta(15.0, 10.0, 5.0, &p), p.a_plus);
        assert_eq!(stdp_delta(35.0, 10.0, 5.0, &p), p.a_plus * (-1.0f64).exp());
        assert_eq!(stdp_delta(-5.0, 10.0, 5.0, &p), p.a_minus * (-1.0f64).exp());
        assert!(stdp_delta(-5.0, 10.0, 5.0, &p) < 0.0);
    }

    #[test]
    fn consolidation_clamps() {
        let p = StdpParams::default();
        assert_eq!(consolidate_weight(6.0, 100.0, &p), 10.0);
        assert_eq!(consolidate_weight(6.0, 0.0, &p), 6.0);
        assert_eq!(consolidate_weight(0.5, -1.0, &p), 0.0);
    }

    #[test]
    fn stdp_param_validation() {
        assert!(StdpParams::default().validate().is_ok());
        let p = StdpParams { a_minus: 0.1, ..Default::default() };
        assert!(p.validate().is_err());
        let p = StdpParams { w_min: 11.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = StdpParams { consolidation_period: 0, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
