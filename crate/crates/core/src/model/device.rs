use crate::model::{BiasPoint, DeviceTemperature, Role, SFedParams};
use crate::scalar::{sigmoid, softplus, Scalar};

/// Threshold of the soft-threshold diode law.
pub fn threshold_voltage<T: Scalar>(v_gs: T, v_gd: T, length_nm: T, params: &SFedParams<T>) -> T {
    params.vth_a0
        + params.vth_ags * v_gs
        + params.vth_agd * v_gd
        + params.k_vth_l * (length_nm - params.l_ref)
}

/// Drain current together with its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceEval<T> {
    pub current: T,
    pub g_ds: T,
    pub g_gs: T,
    pub g_gd: T,
}

impl<T: Scalar> DeviceEval<T> {
    fn zero() -> Self {
        Self {
            current: T::zero(),
            g_ds: T::zero(),
            g_gs: T::zero(),
            g_gd: T::zero(),
        }
    }
}

/// Drain-to-source current through the device.
pub fn device_current<T: Scalar>(
    bias: &BiasPoint<T>,
    role: Role,
    params: &SFedParams<T>,
    temp: &DeviceTemperature<T>,
    length_nm: T,
) -> T {
    evaluate(bias, role, params, temp, length_nm).current
}

/// (dI/dV_DS, dI/dV_GS, dI/dV_GD).
pub fn device_conductances<T: Scalar>(
    bias: &BiasPoint<T>,
    role: Role,
    params: &SFedParams<T>,
    temp: &DeviceTemperature<T>,
    length_nm: T,
) -> (T, T, T) {
    let e = evaluate(bias, role, params, temp, length_nm);
    (e.g_ds, e.g_gs, e.g_gd)
}

/// Evaluates current and analytic partials in one pass.
pub fn evaluate<T: Scalar>(
    bias: &BiasPoint<T>,
    role: Role,
    params: &SFedParams<T>,
    temp: &DeviceTemperature<T>,
    length_nm: T,
) -> DeviceEval<T> {
    if role == Role::ResistorLike {
        return DeviceEval {
            current: params.g_res * bias.v_ds,
            g_ds: params.g_res,
            ..DeviceEval::zero()
        };
    }
    let on = match role {
        Role::ThresholdDiode => threshold_diode(bias, params, temp, length_nm),
        Role::DiodeConnectedReset => reset_switch(bias, params, temp),
        Role::InverterPullUp => inverter(bias, params, temp, length_nm, true),
        Role::InverterPullDown => inverter(bias, params, temp, length_nm, false),
        Role::ResistorLike => unreachable!(),
    };
    blend_off_mode(bias, params, length_nm, on)
}

/// Smoothly replaces the role law by the OFF leakage inside mode D
/// (V_DS > 0, V_GS < 0, V_GD > 0).
fn blend_off_mode<T: Scalar>(
    bias: &BiasPoint<T>,
    params: &SFedParams<T>,
    length_nm: T,
    on: DeviceEval<T>,
) -> DeviceEval<T> {
    let one = T::one();
    let vm = params.v_mode;
    let s_ds = sigmoid(bias.v_ds / vm);
    let s_gs = sigmoid(-bias.v_gs / vm);
    let s_gd = sigmoid(bias.v_gd / vm);
    let w = s_ds * s_gs * s_gd;
    if w == T::zero() {
        return on;
    }
    let dw_ds = w * (one - s_ds) / vm;
    let dw_gs = -w * (one - s_gs) / vm;
    let dw_gd = w * (one - s_gd) / vm;

    // i_off·tanh² for V_DS > 0 and zero below: C¹ at zero and monotone
    // after weighting
    let i_off = params.i_off_at(length_nm);
    let (leak, dleak_ds) = if bias.v_ds > T::zero() {
        let th = (bias.v_ds / params.v_leak).tanh();
        (i_off * th * th, i_off * (th + th) * (one - th * th) / params.v_leak)
    } else {
        (T::zero(), T::zero())
    };

    let keep = one - w;
    let diff = leak - on.current;
    DeviceEval {
        current: keep * on.current + w * leak,
        g_ds: keep * on.g_ds + w * dleak_ds + diff * dw_ds,
        g_gs: keep * on.g_gs + diff * dw_gs,
        g_gd: keep * on.g_gd + diff * dw_gd,
    }
}

/// Softplus turn-on in (|V_DS| − V_th)/v_slope, odd in V_DS and zero at V_DS = 0.
/// Gate voltages enter the threshold referenced to the lower channel terminal.
fn threshold_diode<T: Scalar>(
    bias: &BiasPoint<T>,
    params: &SFedParams<T>,
    temp: &DeviceTemperature<T>,
    length_nm: T,
) -> DeviceEval<T> {
    let x = bias.v_ds;
    let forward = x >= T::zero();
    let sgn = if forward { T::one() } else { -T::one() };
    let (vgs_ref, vgd_ref, dvth_dx) = if forward {
        (bias.v_gs, bias.v_gd + x, params.vth_agd)
    } else {
        (bias.v_gs - x, bias.v_gd, -params.vth_ags)
    };
    let vth = threshold_voltage(vgs_ref, vgd_ref, length_nm, params);
    let vs = params.v_slope;
    let i_sat = params.i_sat_at(temp);
    let u = (x.abs() - vth) / vs;
    let u0 = -vth / vs;
    let (su, su0) = (sigmoid(u), sigmoid(u0));
    let current = sgn * i_sat * (softplus(u) - softplus(u0));
    let g_ds = i_sat / vs * (su - sgn * dvth_dx * (su - su0));
    let dvth_common = -sgn * i_sat / vs * (su - su0);
    DeviceEval {
        current,
        g_ds,
        g_gs: dvth_common * params.vth_ags,
        g_gd: dvth_common * params.vth_agd,
    }
}

/// Gate-enabled sigmoid channel: near zero for V_DS below `v_reset`,
/// then rising monotonically to a bounded plateau.
fn reset_switch<T: Scalar>(
    bias: &BiasPoint<T>,
    params: &SFedParams<T>,
    temp: &DeviceTemperature<T>,
) -> DeviceEval<T> {
    let one = T::one();
    let i_sat = params.i_sat_at(temp);
    let gate = sigmoid((bias.v_gs - params.v_gate_on) / params.v_gate_slope);
    let vs = params.v_slope;
    let s = sigmoid((bias.v_ds - params.v_reset) / vs);
    let chan = s - sigmoid(-params.v_reset / vs);
    DeviceEval {
        current: i_sat * gate * chan,
        g_ds: i_sat * gate * s * (one - s) / vs,
        g_gs: i_sat * chan * gate * (one - gate) / params.v_gate_slope,
        g_gd: T::zero(),
    }
}

/// Complementary switch laws with a drive that grows without bound in the
/// gate overdrive. The pull-down is controlled by V_GS; the pull-up (drain
/// on the supply) by V_D − V_G = −V_GD. Equal laws on both sides put the
/// inverter midpoint at half the supply.
fn inverter<T: Scalar>(
    bias: &BiasPoint<T>,
    params: &SFedParams<T>,
    temp: &DeviceTemperature<T>,
    length_nm: T,
    pull_up: bool,
) -> DeviceEval<T> {
    let one = T::one();
    let control = if pull_up { -bias.v_gd } else { bias.v_gs };
    let u = (control - params.v_gate_on) / params.v_gate_slope;
    let drive = params.i_sat_at(temp) * softplus(u) + params.i_off_at(length_nm);
    let th = (bias.v_ds / params.v_sat).tanh();
    let d_control = th * params.i_sat_at(temp) * sigmoid(u) / params.v_gate_slope;
    let (g_gs, g_gd) = if pull_up {
        (T::zero(), -d_control)
    } else {
        (d_control, T::zero())
    };
    DeviceEval {
        current: th * drive,
        g_ds: drive * (one - th * th) / params.v_sat,
        g_gs,
        g_gd,
    }
}

/// Threshold-diode law after latching: the gate-set knee collapses to
/// `v_hold` and the gates lose control. The engine applies it only while
/// current keeps flowing in the direction that triggered the latch.
pub fn evaluate_latched<T: Scalar>(
    bias: &BiasPoint<T>,
    params: &SFedParams<T>,
    temp: &DeviceTemperature<T>,
) -> DeviceEval<T> {
    let x = bias.v_ds;
    let sgn = if x >= T::zero() { T::one() } else { -T::one() };
    let vs = params.v_slope;
    let i_sat = params.i_sat_at(temp);
    let u = (x.abs() - params.v_hold) / vs;
    let u0 = -params.v_hold / vs;
    DeviceEval {
        current: sgn * i_sat * (softplus(u) - softplus(u0)),
        g_ds: i_sat / vs * sigmoid(u),
        g_gs: T::zero(),
        g_gd: T::zero(),
    }
}
