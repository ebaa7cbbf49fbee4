//! Run configuration: a flat TOML subset of dotted key paths.
//!
//! Every key is optional; an empty file yields the defaults of the selected
//! gate. Physical values are SI, with the unit in the key suffix (`_hz` is a
//! frequency f = ω/2π, `_rad_s` an angular frequency, `_m` a length, `_s` a
//! time, `_k` a temperature, `_t` a field in tesla). Unknown keys, wrong types
//! and out-of-range values are rejected with the line they appear on.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::de::{DeTable, DeValue};
use toml::Spanned;

use crate::constants::{MU0, TWO_PI};
use crate::device::DeviceConfig;
use crate::error::{Error, Result};
use crate::geometry::PotentialVariant;
use crate::lindblad::MagnonInit;
use crate::model::{device_preset, reference_coupling, reference_ratio, GateKind, Overrides};

/// Smallest Fock size accepted for any subsystem.
pub const MIN_DIM: usize = 2;

/// Default sweep grids: log-spaced for CZ, linear otherwise.
pub fn default_sweep(kind: GateKind) -> SweepGrid {
    match kind {
        GateKind::Cz => SweepGrid::Range { start: 0.005, stop: 0.2, points: 60, spacing: Spacing::Log },
        _ => SweepGrid::Range { start: 0.5, stop: 0.995, points: 50, spacing: Spacing::Linear },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Values of ω_m/ω_q visited by a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize, spacing: Spacing },
}

impl SweepGrid {
    pub fn ratios(&self) -> Vec<f64> {
        match self {
            SweepGrid::List(v) => v.clone(),
            SweepGrid::Range { start, stop, points, spacing } => {
                let n = *points;
                if n == 1 {
                    return vec![*start];
                }
                (0..n)
                    .map(|i| {
                        let f = i as f64 / (n - 1) as f64;
                        match spacing {
                            Spacing::Linear => start + (stop - start) * f,
                            Spacing::Log => (start.ln() + (stop.ln() - start.ln()) * f).exp(),
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config { path: "sweep".into(), message: m });
        match self {
            SweepGrid::List(v) if v.is_empty() => bad("sweep list is empty".into()),
            SweepGrid::List(v) => match v.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
                Some(r) => bad(format!("ratio {r} must be positive")),
                None => Ok(()),
            },
            SweepGrid::Range { start, stop, points, .. } => {
                if *points == 0 {
                    bad("sweep.points must be at least 1".into())
                } else if !(*start > 0.0 && *stop > 0.0) || !start.is_finite() || !stop.is_finite() {
                    bad(format!("sweep bounds must be positive, got [{start}, {stop}]"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// How the geometrical factor I_x entering the couplings is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IxSource {
    /// Use `device.magnet.i_x_per_m` as given.
    Fixed,
    /// Evaluate the magnet/loop geometry with this potential model.
    Model(PotentialVariant),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MagnonInitConfig {
    Vacuum,
    /// Thermal state; `None` takes the bath occupation of each sweep point.
    Thermal(Option<f64>),
}

impl MagnonInitConfig {
    pub fn resolve(self, bath_n_th: f64) -> MagnonInit {
        match self {
            MagnonInitConfig::Vacuum => MagnonInit::Vacuum,
            MagnonInitConfig::Thermal(n) => MagnonInit::Thermal(n.unwrap_or(bath_n_th)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    /// Write measured wall times into the CSV. Off by default so that
    /// repeated runs give identical bytes.
    pub wall_time: bool,
}

/// Settings of the `dynamics` command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsConfig {
    /// Input state label such as `|10>` or `|1+>`.
    pub input: String,
    pub points: usize,
    /// End time (s); the gate time when absent.
    pub t_max: Option<f64>,
    /// Operating ratio ω_m/ω_q; the gate's reference ratio when absent.
    pub ratio: Option<f64>,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig { input: "|10>".into(), points: 201, t_max: None, ratio: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub device: DeviceConfig,
    pub gate: GateKind,
    pub sweep: SweepGrid,
    pub parallel: bool,
    /// Direct-coupling mode: the effective coupling is pinned to the gate's
    /// reference value unless `overrides.coupling_rad_s` is given.
    pub direct: bool,
    pub magnon_init: MagnonInitConfig,
    pub dims: [usize; 3],
    pub i_x_source: IxSource,
    pub overrides: Overrides,
    pub output: OutputPaths,
    pub dynamics: DynamicsConfig,
    pub seed: u64,
}

impl RunConfig {
    /// Defaults for gate `kind`: device preset, production dims and sweep grid.
    pub fn defaults(kind: GateKind) -> Self {
        RunConfig {
            device: device_preset(kind),
            gate: kind,
            sweep: default_sweep(kind),
            parallel: true,
            direct: false,
            magnon_init: MagnonInitConfig::Vacuum,
            dims: kind.default_dims(),
            i_x_source: IxSource::Fixed,
            overrides: Overrides::default(),
            output: OutputPaths::default(),
            dynamics: DynamicsConfig::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.device.validate().map_err(|e| Error::Config { path: "device".into(), message: e.to_string() })?;
        self.sweep.validate()?;
        for (i, d) in self.dims.iter().enumerate() {
            if *d < MIN_DIM {
                let name = ["qubit1", "qubit2", "magnon"][i];
                return Err(Error::Config { path: format!("dims.{name}"), message: format!("Fock size {d} < {MIN_DIM}") });
            }
        }
        if self.dynamics.points < 2 {
            return Err(Error::Config { path: "dynamics.points".into(), message: "need at least 2 time points".into() });
        }
        if let Some(t) = self.dynamics.t_max {
            if !(t > 0.0) {
                return Err(Error::Config { path: "dynamics.t_max_s".into(), message: format!("must be positive, got {t}") });
            }
        }
        if let MagnonInitConfig::Thermal(Some(n)) = self.magnon_init {
            if !(n >= 0.0) {
                return Err(Error::Config { path: "magnon.n_th".into(), message: format!("must be non-negative, got {n}") });
            }
        }
        Ok(())
    }

    /// Device with I_x resolved per `i_x_source` and overrides.
    pub fn resolved_device(&self) -> Result<DeviceConfig> {
        let mut device = self.device;
        if let IxSource::Model(variant) = self.i_x_source {
            device.magnet.i_x = crate::geometry::magnet_geometrical_factor(&device.magnet, variant)?;
        }
        Ok(device)
    }

    /// Overrides in effect for gate `kind`, including direct-coupling mode.
    /// Gate-specific couplings only carry over within the same gate family.
    pub fn overrides_for(&self, kind: GateKind) -> Overrides {
        let same_family = kind == self.gate || (kind.is_exchange() && self.gate.is_exchange());
        let mut ov = if same_family { self.overrides } else { Overrides { i_x: self.overrides.i_x, ..Overrides::default() } };
        if self.direct && ov.coupling.is_none() {
            ov.coupling = Some(reference_coupling(kind));
        }
        ov
    }

    pub fn dynamics_ratio(&self) -> f64 {
        self.dynamics.ratio.unwrap_or_else(|| reference_ratio(self.gate))
    }

    /// Dims lowered below the gate defaults, reported as warnings.
    pub fn lowered_dims(&self) -> Vec<String> {
        let base = self.gate.default_dims();
        (0..3)
            .filter(|&i| self.dims[i] < base[i])
            .map(|i| format!("dims[{i}] = {} is below the default {}", self.dims[i], base[i]))
            .collect()
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    load_config_for(path, None)
}

/// Reads a config file with the gate chosen outside it, e.g. on the
/// command line. A gate key in the file must agree with `gate`.
pub fn load_config_for(path: &Path, gate: Option<GateKind>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_for(&text, gate)
}

/// Parses config text; see the module documentation for the key set.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_for(text, None)
}

/// As [`parse_config`], with an externally selected gate.
pub fn parse_config_for(text: &str, gate: Option<GateKind>) -> Result<RunConfig> {
    let root = DeTable::parse(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
        message: e.message().to_string(),
    })?;
    let mut entries = Vec::new();
    flatten(text, "", root.get_ref(), &mut entries)?;

    // The gate decides the device preset, dims and sweep, so it goes first.
    let file_gate = match entries.iter().find(|e| e.path == "gate") {
        Some(e) => {
            let g = e.value.string(&e.path, e.line)?.parse::<GateKind>().map_err(|err| e.error(err.to_string()))?;
            if let Some(sel) = gate.filter(|sel| *sel != g) {
                return Err(e.error(format!("gate `{g}` conflicts with the selected gate `{sel}`")));
            }
            Some(g)
        }
        None => None,
    };
    let gate = file_gate.or(gate).unwrap_or(GateKind::Iswap);
    let mut cfg = RunConfig::defaults(gate);
    let mut sweep_list: Option<Vec<f64>> = None;
    let (mut start, mut stop, mut points, mut spacing) = match default_sweep(gate) {
        SweepGrid::Range { start, stop, points, spacing } => (start, stop, points, spacing),
        SweepGrid::List(_) => unreachable!("default grids are ranges"),
    };
    let mut range_set = false;
    let mut gap: Option<f64> = None;
    let mut n_th_init: Option<f64> = None;
    let mut init_kind = "vacuum".to_string();

    for e in &entries {
        let v = &e.value;
        let (p, l) = (e.path.as_str(), e.line);
        let dev = &mut cfg.device;
        match p {
            "gate" => {}
            "seed" => cfg.seed = v.uint(p, l)?,
            "mode" => {
                cfg.direct = match v.string(p, l)?.as_str() {
                    "derived" => false,
                    "direct" => true,
                    other => return Err(e.error(format!("unknown mode `{other}` (derived, direct)"))),
                }
            }
            "dims.qubit1" => cfg.dims[0] = v.uint(p, l)? as usize,
            "dims.qubit2" => cfg.dims[1] = v.uint(p, l)? as usize,
            "dims.magnon" => cfg.dims[2] = v.uint(p, l)? as usize,
            "sweep.ratios" => sweep_list = Some(v.floats(p, l)?),
            "sweep.start" => (start, range_set) = (v.float(p, l)?, true),
            "sweep.stop" => (stop, range_set) = (v.float(p, l)?, true),
            "sweep.points" => (points, range_set) = (v.uint(p, l)? as usize, true),
            "sweep.spacing" => {
                spacing = match v.string(p, l)?.as_str() {
                    "linear" => Spacing::Linear,
                    "log" => Spacing::Log,
                    other => return Err(e.error(format!("unknown spacing `{other}` (linear, log)"))),
                };
                range_set = true;
            }
            "sweep.parallel" => cfg.parallel = v.boolean(p, l)?,
            "magnon.init" => init_kind = v.string(p, l)?,
            "magnon.n_th" => n_th_init = Some(v.float(p, l)?),
            "output.csv" => cfg.output.csv = Some(PathBuf::from(v.string(p, l)?)),
            "output.svg" => cfg.output.svg = Some(PathBuf::from(v.string(p, l)?)),
            "output.wall_time" => cfg.output.wall_time = v.boolean(p, l)?,
            "dynamics.input" => cfg.dynamics.input = v.string(p, l)?,
            "dynamics.points" => cfg.dynamics.points = v.uint(p, l)? as usize,
            "dynamics.t_max_s" => cfg.dynamics.t_max = Some(v.float(p, l)?),
            "dynamics.ratio" => cfg.dynamics.ratio = Some(v.float(p, l)?),
            "overrides.i_x_per_m" => cfg.overrides.i_x = Some(v.float(p, l)?),
            "overrides.j_rad_s" => cfg.overrides.j = Some(v.float(p, l)?),
            "overrides.g_rad_s" => cfg.overrides.g = Some(v.float(p, l)?),
            "overrides.g_tilde_rad_s" => cfg.overrides.g_tilde = Some(v.float(p, l)?),
            "overrides.coupling_rad_s" => cfg.overrides.coupling = Some(v.float(p, l)?),
            "device.b_c_t" => dev.b_c = v.float(p, l)?,
            "device.magnet.l_x_m" => dev.magnet.l_x = v.float(p, l)?,
            "device.magnet.l_z_m" => dev.magnet.l_z = v.float(p, l)?,
            "device.magnet.gap_m" => gap = Some(v.float(p, l)?),
            "device.magnet.r_loop_m" => dev.magnet.r_loop = v.float(p, l)?,
            "device.magnet.n_t" => dev.magnet.n_t = v.float(p, l)?,
            "device.magnet.mu0_ms_t" => dev.magnet.m_s = v.float(p, l)? / MU0,
            "device.magnet.rho_s_per_m3" => dev.magnet.rho_s = v.float(p, l)?,
            "device.magnet.gamma0_hz_per_t" => dev.magnet.gamma0 = TWO_PI * v.float(p, l)?,
            "device.magnet.i_x_per_m" => dev.magnet.i_x = v.float(p, l)?,
            "device.magnet.i_x_model" => {
                cfg.i_x_source = match v.string(p, l)?.as_str() {
                    "fixed" => IxSource::Fixed,
                    "point-dipole" => IxSource::Model(PotentialVariant::PointDipole),
                    "ellipsoid-exact" => IxSource::Model(PotentialVariant::EllipsoidExact),
                    "surface-charge" => IxSource::Model(PotentialVariant::EllipsoidSurfaceCharge),
                    other => {
                        return Err(e.error(format!(
                            "unknown I_x model `{other}` (fixed, point-dipole, ellipsoid-exact, surface-charge)"
                        )))
                    }
                }
            }
            "device.env.temperature_k" => dev.env.temperature = v.float(p, l)?,
            "device.env.t1_s" => dev.env.t1 = v.float(p, l)?,
            "device.env.t_phi_s" => dev.env.t_phi = v.float(p, l)?,
            "device.env.alpha_g" => dev.env.alpha_g = v.float(p, l)?,
            "device.env.kappa_tilde_hz" => dev.env.kappa_tilde = TWO_PI * v.float(p, l)?,
            _ => {
                let Some(rest) = p.strip_prefix("device.qubit1.").map(|r| (0, r)).or_else(|| p.strip_prefix("device.qubit2.").map(|r| (1, r)))
                else {
                    return Err(e.error(format!("unknown key `{p}`")));
                };
                let q = if rest.0 == 0 { &mut dev.qubit1 } else { &mut dev.qubit2 };
                match rest.1 {
                    "e_c_hz" => q.e_c = v.float(p, l)?,
                    "e_j_sigma_hz" => q.e_j_sigma = v.float(p, l)?,
                    "a_j" => q.a_j = v.float(p, l)?,
                    "phi_b_rad" => q.phi_b = v.float(p, l)?,
                    "phi_b_over_pi" => q.phi_b = PI * v.float(p, l)?,
                    "phi_ac_rad" => q.phi_ac = v.float(p, l)?,
                    _ => return Err(e.error(format!("unknown key `{p}`"))),
                }
            }
        }
    }

    if let Some(list) = sweep_list {
        if range_set {
            return Err(Error::Config {
                path: "sweep".into(),
                message: "give either sweep.ratios or sweep.start/stop/points/spacing, not both".into(),
            });
        }
        cfg.sweep = SweepGrid::List(list);
    } else {
        cfg.sweep = SweepGrid::Range { start, stop, points, spacing };
    }
    // The loop keeps its gap to the magnet surface when the short axis changes.
    let default_gap = { let m = device_preset(gate).magnet; m.d - m.l_z };
    cfg.device.magnet.d = cfg.device.magnet.l_z + gap.unwrap_or(default_gap);
    cfg.magnon_init = match init_kind.as_str() {
        "vacuum" if n_th_init.is_some() => {
            return Err(Error::Config { path: "magnon.n_th".into(), message: "only valid with magnon.init = \"thermal\"".into() })
        }
        "vacuum" => MagnonInitConfig::Vacuum,
        "thermal" => MagnonInitConfig::Thermal(n_th_init),
        other => {
            return Err(Error::Config { path: "magnon.init".into(), message: format!("unknown `{other}` (vacuum, thermal)") })
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

struct Entry<'i> {
    path: String,
    line: usize,
    value: Leaf<'i>,
}

impl Entry<'_> {
    fn error(&self, message: String) -> Error {
        Error::Parse { line: self.line, message: format!("`{}`: {message}", self.path) }
    }
}

struct Leaf<'i>(&'i DeValue<'i>);

fn flatten<'i>(text: &str, prefix: &str, table: &'i DeTable<'i>, out: &mut Vec<Entry<'i>>) -> Result<()> {
    for (key, value) in table.iter() {
        let path = if prefix.is_empty() { key.get_ref().to_string() } else { format!("{prefix}.{}", key.get_ref()) };
        match value.get_ref() {
            DeValue::Table(t) => flatten(text, &path, t, out)?,
            v => out.push(Entry { line: line_of(text, span_start(key)), path, value: Leaf(v) }),
        }
    }
    Ok(())
}

fn span_start<T>(s: &Spanned<T>) -> usize {
    s.span().start
}

fn type_error(path: &str, line: usize, want: &str) -> Error {
    Error::Parse { line, message: format!("`{path}` must be {want}") }
}

impl Leaf<'_> {
    fn float(&self, path: &str, line: usize) -> Result<f64> {
        let x = match self.0 {
            DeValue::Float(f) => parse_float(f.as_str()),
            DeValue::Integer(i) if i.radix() == 10 => parse_float(i.as_str()),
            _ => None,
        };
        match x {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(type_error(path, line, "a finite number")),
        }
    }

    fn uint(&self, path: &str, line: usize) -> Result<u64> {
        match self.0 {
            DeValue::Integer(i) => u64::from_str_radix(&i.as_str().replace('_', ""), i.radix())
                .map_err(|_| type_error(path, line, "a non-negative integer")),
            _ => Err(type_error(path, line, "a non-negative integer")),
        }
    }

    fn boolean(&self, path: &str, line: usize) -> Result<bool> {
        match self.0 {
            DeValue::Boolean(b) => Ok(*b),
            _ => Err(type_error(path, line, "a boolean")),
        }
    }

    fn string(&self, path: &str, line: usize) -> Result<String> {
        match self.0 {
            DeValue::String(s) => Ok(s.to_string()),
            _ => Err(type_error(path, line, "a string")),
        }
    }

    fn floats(&self, path: &str, line: usize) -> Result<Vec<f64>> {
        match self.0 {
            DeValue::Array(a) => a.iter().map(|v| Leaf(v.get_ref()).float(path, line)).collect(),
            _ => Err(type_error(path, line, "an array of numbers")),
        }
    }
}

fn parse_float(s: &str) -> Option<f64> {
    s.replace('_', "").parse().ok()
}
