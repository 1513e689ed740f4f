//! `name = value` parameter files with SI-suffixed numbers.

use crate::model::{ModelError, SFedParams};
use crate::units::{format_exact, parse_si};

const NAMES: [&str; 21] = [
    "i_sat",
    "v_slope",
    "i_off",
    "vth_a0",
    "vth_ags",
    "vth_agd",
    "g_res",
    "l_ref",
    "k_vth_l",
    "lambda_leak",
    "alpha_t",
    "c_par",
    "v_gate_on",
    "v_gate_slope",
    "v_sat",
    "v_reset",
    "v_mode",
    "v_leak",
    "i_latch",
    "i_hold",
    "v_hold",
];

impl SFedParams<f64> {
    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "i_sat" => &mut self.i_sat,
            "v_slope" => &mut self.v_slope,
            "i_off" => &mut self.i_off,
            "vth_a0" => &mut self.vth_a0,
            "vth_ags" => &mut self.vth_ags,
            "vth_agd" => &mut self.vth_agd,
            "g_res" => &mut self.g_res,
            "l_ref" => &mut self.l_ref,
            "k_vth_l" => &mut self.k_vth_l,
            "lambda_leak" => &mut self.lambda_leak,
            "alpha_t" => &mut self.alpha_t,
            "c_par" => &mut self.c_par,
            "v_gate_on" => &mut self.v_gate_on,
            "v_gate_slope" => &mut self.v_gate_slope,
            "v_sat" => &mut self.v_sat,
            "v_reset" => &mut self.v_reset,
            "v_mode" => &mut self.v_mode,
            "v_leak" => &mut self.v_leak,
            "i_latch" => &mut self.i_latch,
            "i_hold" => &mut self.i_hold,
            "v_hold" => &mut self.v_hold,
            _ => return None,
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let mut copy = *self;
        copy.slot(name).map(|v| *v)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ModelError> {
        let slot = self
            .slot(name)
            .ok_or_else(|| ModelError::UnknownParam(name.to_string()))?;
        *slot = value;
        Ok(())
    }

    /// Parses a parameter file on top of the defaults. Blank lines and lines
    /// starting with `#` or `*` are ignored. The result is validated.
    pub fn from_kv_text(text: &str) -> Result<Self, ModelError> {
        let mut params = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('*') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ModelError::ParamSyntax {
                line: line_no,
                message: format!("expected `name = value`, got '{line}'"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            let value = parse_si(value).map_err(|e| ModelError::ParamSyntax {
                line: line_no,
                message: e.to_string(),
            })?;
            params.set(&key, value).map_err(|_| ModelError::ParamSyntax {
                line: line_no,
                message: format!("unknown parameter '{key}'"),
            })?;
        }
        params.validate()?;
        Ok(params)
    }

    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        for name in NAMES {
            let v = self.get(name).expect("known name");
            out.push_str(&format!("{name} = {}\n", format_exact(v)));
        }
        out
    }

    pub fn param_names() -> &'static [&'static str] {
        &NAMES
    }
}
