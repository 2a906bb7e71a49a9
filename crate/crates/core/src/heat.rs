//! Electro-thermal model of a serpentine copper heater on the PCB.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resistance may be evaluated this far outside the resistivity table,
/// extrapolating linearly from the nearest segment.
pub const EXTRAPOLATION_MARGIN_K: f64 = 10.0;

const SELF_CONSISTENT_TOLERANCE_K: f64 = 1e-9;
const SELF_CONSISTENT_MAX_ITER: usize = 1000;

/// Copper trace of one heating element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeaterGeometry {
    /// Trace length at the reference temperature, m.
    pub length: f64,
    /// Trace width, m.
    pub width: f64,
    /// Trace thickness, m.
    pub thickness: f64,
    /// Centre of the heating area in board coordinates, m.
    pub center: [f64; 2],
    /// Side of the square heating area, m.
    pub footprint: f64,
}

impl HeaterGeometry {
    /// 432 mm long, 0.16 mm wide, 35 µm thick trace on a 1 cm² pad.
    pub fn pcb_trace(center: [f64; 2]) -> Self {
        Self {
            length: 0.432,
            width: 0.16e-3,
            thickness: 35e-6,
            center,
            footprint: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.length, self.width, self.thickness, self.footprint];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) && self.center.iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "heater geometry must have positive finite lengths: {self:?}"
            )))
        }
    }

    /// Closed square footprint test.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let h = 0.5 * self.footprint;
        (p[0] - self.center[0]).abs() <= h && (p[1] - self.center[1]).abs() <= h
    }

    /// Axis-aligned bounds `(x0, y0, x1, y1)`.
    pub fn bounds(&self) -> [f64; 4] {
        let h = 0.5 * self.footprint;
        [
            self.center[0] - h,
            self.center[1] - h,
            self.center[0] + h,
            self.center[1] + h,
        ]
    }
}

/// Temperature-dependent resistivity table plus thermal expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CopperProperties {
    /// `(temperature K, resistivity Ω·m)` pairs, sorted by temperature.
    pub rho_table: Vec<(f64, f64)>,
    /// Linear expansion coefficient, 1/K.
    pub alpha: f64,
    /// Reference temperature of the trace length, K.
    pub t0: f64,
}

impl Default for CopperProperties {
    /// 77 K and 296 K points, plus a 400 K handbook point so room-temperature
    /// heating sweeps stay inside the table.
    fn default() -> Self {
        Self {
            rho_table: vec![(77.0, 1.5e-9), (296.0, 1.68e-8), (400.0, 2.40e-8)],
            alpha: 17e-6,
            t0: 296.0,
        }
    }
}

impl CopperProperties {
    pub fn validate(&self) -> Result<()> {
        if self.rho_table.is_empty() {
            return Err(Error::Domain("resistivity table is empty".into()));
        }
        if self.rho_table.iter().any(|&(t, r)| !(t > 0.0 && r > 0.0)) {
            return Err(Error::Domain("resistivity table entries must be positive".into()));
        }
        if self.rho_table.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Domain(
                "resistivity table must be strictly sorted by temperature".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.t0 > 0.0) {
            return Err(Error::Domain("alpha and T0 must be positive".into()));
        }
        Ok(())
    }

    /// Resistivity at `t`, linear between table points.
    pub fn resistivity(&self, t: f64) -> Result<f64> {
        self.validate()?;
        let table = &self.rho_table;
        let (lo, hi) = (table[0].0, table[table.len() - 1].0);
        if !(t >= lo - EXTRAPOLATION_MARGIN_K && t <= hi + EXTRAPOLATION_MARGIN_K) {
            return Err(Error::Domain(format!(
                "temperature {t} K outside resistivity table [{lo}, {hi}] K"
            )));
        }
        if table.len() == 1 {
            return Ok(table[0].1);
        }
        let seg = table.windows(2).position(|w| t <= w[1].0).unwrap_or(table.len() - 2);
        let (t_a, r_a) = table[seg];
        let (t_b, r_b) = table[seg + 1];
        let rho = r_a + (r_b - r_a) * (t - t_a) / (t_b - t_a);
        if rho <= 0.0 {
            return Err(Error::Domain(format!(
                "extrapolated resistivity at {t} K is not positive"
            )));
        }
        Ok(rho)
    }
}

/// `ρ(T)·L0·[1 + α(T - T0)] / (h·w)`.
pub fn electrical_resistance(t: f64, g: &HeaterGeometry, cu: &CopperProperties) -> Result<f64> {
    g.validate()?;
    let rho = cu.resistivity(t)?;
    let expansion = 1.0 + cu.alpha * (t - cu.t0);
    Ok(rho * g.length * expansion / (g.thickness * g.width))
}

/// Joule power `R_el(T)·I²`.
pub fn dissipated_power(current: f64, t: f64, g: &HeaterGeometry, cu: &CopperProperties) -> Result<f64> {
    check_current(current)?;
    Ok(electrical_resistance(t, g, cu)? * current * current)
}

fn check_current(i: f64) -> Result<()> {
    if i.is_finite() && i >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("current must be non-negative, got {i} A")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentLabel {
    Air296K,
    Ln277K,
    Custom,
}

/// Thermal surroundings of the board.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalEnvironment {
    /// Steady-state thermal resistance, K/W.
    pub r_th: f64,
    /// Convective coefficient, W/(m²·K), when known.
    #[serde(default)]
    pub h_conv: Option<f64>,
    pub label: EnvironmentLabel,
    /// Ambient temperature, K.
    pub ambient: f64,
}

impl ThermalEnvironment {
    pub fn new(r_th: f64, ambient: f64, label: EnvironmentLabel) -> Result<Self> {
        if !(r_th.is_finite() && r_th > 0.0) {
            return Err(Error::Domain(format!("R_th must be positive, got {r_th}")));
        }
        if !(ambient > 0.0) {
            return Err(Error::Domain(format!("ambient must be positive, got {ambient}")));
        }
        Ok(Self {
            r_th,
            h_conv: None,
            label,
            ambient,
        })
    }

    /// Room air: R_th·R_el = 40.0 K/A² measured on R9.
    pub fn air_296k(g: &HeaterGeometry, cu: &CopperProperties) -> Result<Self> {
        let r_el = electrical_resistance(296.0, g, cu)?;
        let mut env = Self::new(
            derived_thermal_resistance(40.0, r_el)?,
            296.0,
            EnvironmentLabel::Air296K,
        )?;
        env.h_conv = Some(10.0);
        Ok(env)
    }

    /// Liquid nitrogen: R_th·R_el = 0.49 K/A².
    pub fn ln2_77k(g: &HeaterGeometry, cu: &CopperProperties) -> Result<Self> {
        let r_el = electrical_resistance(77.0, g, cu)?;
        let mut env = Self::new(derived_thermal_resistance(0.49, r_el)?, 77.0, EnvironmentLabel::Ln277K)?;
        env.h_conv = Some(120.0);
        Ok(env)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiseMode {
    /// Resistance evaluated at ambient.
    Frozen,
    /// Resistance evaluated at the heated temperature, solved by fixed point.
    SelfConsistent,
}

/// Steady-state temperature rise `ΔT = R_th·R_el(T)·I²`.
pub fn temperature_rise(
    current: f64,
    env: &ThermalEnvironment,
    g: &HeaterGeometry,
    cu: &CopperProperties,
    mode: RiseMode,
) -> Result<f64> {
    check_current(current)?;
    let rise_at =
        |dt: f64| -> Result<f64> { Ok(env.r_th * electrical_resistance(env.ambient + dt, g, cu)? * current * current) };
    let frozen = rise_at(0.0)?;
    match mode {
        RiseMode::Frozen => Ok(frozen),
        RiseMode::SelfConsistent => {
            let mut dt = frozen;
            for _ in 0..SELF_CONSISTENT_MAX_ITER {
                let next = rise_at(dt)?;
                if !next.is_finite() {
                    break;
                }
                if (next - dt).abs() < SELF_CONSISTENT_TOLERANCE_K {
                    return Ok(next);
                }
                dt = next;
            }
            Err(Error::Numeric(format!(
                "self-consistent temperature rise did not converge at I = {current} A"
            )))
        }
    }
}

/// `K = R_th·R_el` from a least-squares fit of `ΔT = K·I²` through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    /// K/A².
    pub k: f64,
    pub sigma_k: f64,
    pub n_points: usize,
}

pub fn fit_quadratic_coefficient(points: &[(f64, f64)]) -> Result<QuadraticFit> {
    if points.iter().any(|(i, dt)| !(i.is_finite() && dt.is_finite())) {
        return Err(Error::DegenerateFit("non-finite measurement".into()));
    }
    let mut currents: Vec<f64> = points.iter().map(|p| p.0.abs()).filter(|&i| i > 0.0).collect();
    currents.sort_by(f64::total_cmp);
    currents.dedup();
    if currents.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least two distinct non-zero currents, got {}",
            currents.len()
        )));
    }
    let (sxx, sxy) = points.iter().fold((0.0, 0.0), |(sxx, sxy), &(i, dt)| {
        let x = i * i;
        (sxx + x * x, sxy + x * dt)
    });
    let k = sxy / sxx;
    let n = points.len();
    let rss: f64 = points.iter().map(|&(i, dt)| (dt - k * i * i).powi(2)).sum();
    let sigma_k = (rss / (n - 1) as f64 / sxx).sqrt();
    Ok(QuadraticFit {
        k,
        sigma_k,
        n_points: n,
    })
}

/// `R_th = K / R_el`.
pub fn derived_thermal_resistance(k: f64, r_el: f64) -> Result<f64> {
    if !(r_el > 0.0) {
        return Err(Error::Domain(format!("R_el must be positive, got {r_el}")));
    }
    Ok(k / r_el)
}

/// Thermal-resistance ratio cold/hot under pure convection, `h_hot / h_cold`.
pub fn thermal_resistance_ratio(h_hot: f64, h_cold: f64) -> Result<f64> {
    if !(h_hot > 0.0 && h_cold > 0.0) {
        return Err(Error::Domain(format!(
            "convective coefficients must be positive (hot {h_hot}, cold {h_cold})"
        )));
    }
    Ok(h_hot / h_cold)
}
