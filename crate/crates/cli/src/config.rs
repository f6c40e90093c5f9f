//! Operating parameters: built-in defaults, overridden by a `key = value`
//! config file, overridden by command-line flags.

use std::fmt::Write as _;
use std::path::Path;

use wireframe_core::annotate::DEFAULT_MERGE_RADIUS;
use wireframe_core::construct::{
    ConstructionParams, DEFAULT_BOUNDARY_FRAC, DEFAULT_DELTA_RAY, DEFAULT_INCIDENCE_TOL,
    DEFAULT_KAPPA_MIN, DEFAULT_MIN_PIECE_LEN, DEFAULT_NMS_RADIUS, DEFAULT_OMEGA,
};
use wireframe_core::eval::{default_sweep, EvalConfig, DEFAULT_TOLERANCE_FRAC};
use wireframe_core::gridcodec::{
    GridConfig, DEFAULT_BINS, DEFAULT_GRID, DEFAULT_TAU_B, DEFAULT_TAU_C,
};
use wireframe_core::hough::HoughParams;
use wireframe_core::loss::{LossWeights, DEFAULT_R_MAX};

use crate::error::{usage, CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub merge_radius: f64,
    pub grid: usize,
    pub bins: usize,
    pub tau_c: f64,
    pub tau_b: f64,
    pub omega: f64,
    pub delta_ray: f64,
    pub nms_radius: f64,
    pub boundary_frac: f64,
    pub kappa_min: f64,
    pub min_piece_len: f64,
    pub incidence_tol: f64,
    pub max_ray_gap: Option<usize>,
    pub tol_frac: f64,
    pub sweep: Vec<f64>,
    pub weights: LossWeights,
    pub rmax: f64,
    pub seed: u64,
    pub hough: HoughParams,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            merge_radius: DEFAULT_MERGE_RADIUS,
            grid: DEFAULT_GRID,
            bins: DEFAULT_BINS,
            tau_c: DEFAULT_TAU_C,
            tau_b: DEFAULT_TAU_B,
            omega: DEFAULT_OMEGA,
            delta_ray: DEFAULT_DELTA_RAY,
            nms_radius: DEFAULT_NMS_RADIUS,
            boundary_frac: DEFAULT_BOUNDARY_FRAC,
            kappa_min: DEFAULT_KAPPA_MIN,
            min_piece_len: DEFAULT_MIN_PIECE_LEN,
            incidence_tol: DEFAULT_INCIDENCE_TOL,
            max_ray_gap: None,
            tol_frac: DEFAULT_TOLERANCE_FRAC,
            sweep: default_sweep(),
            weights: LossWeights::default(),
            rmax: DEFAULT_R_MAX,
            seed: 0,
            hough: HoughParams::default(),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim()
        .parse()
        .map_err(|_| usage(format!("invalid value {v:?} for {key}")))
}

/// `"a:b:step"` (inclusive range) or a comma-separated list.
pub fn parse_sweep(s: &str) -> CliResult<Vec<f64>> {
    let s = s.trim();
    let out = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(usage(format!("sweep {s:?} must look like start:stop:step")));
        }
        let (a, b, step): (f64, f64, f64) = (
            num("sweep", parts[0])?,
            num("sweep", parts[1])?,
            num("sweep", parts[2])?,
        );
        if !(step > 0.0) || !(a <= b) {
            return Err(usage(format!(
                "sweep {s:?} needs start <= stop and step > 0"
            )));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        // snap to 12 decimals so 0.1 + 2 * 0.1 prints as 0.3
        (0..=n)
            .map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        s.split(',')
            .map(|v| num("sweep", v))
            .collect::<CliResult<Vec<f64>>>()?
    };
    if out.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(usage(format!("sweep {s:?} must be strictly increasing")));
    }
    Ok(out)
}

pub fn format_sweep(sweep: &[f64]) -> String {
    sweep
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Four comma-separated weights: center confidence, center location, branch
/// confidence, branch location.
pub fn parse_weights(s: &str) -> CliResult<LossWeights> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| num("weights", x))
        .collect::<CliResult<_>>()?;
    if v.len() != 4 {
        return Err(usage(format!("weights {s:?} must have 4 entries")));
    }
    let w = LossWeights {
        conf_c: v[0],
        loc_c: v[1],
        conf_b: v[2],
        loc_b: v[3],
    };
    w.validate().map_err(|e| usage(e.to_string()))?;
    Ok(w)
}

pub fn parse_gap(s: &str) -> CliResult<Option<usize>> {
    match s.trim() {
        "none" => Ok(None),
        v => num("max_ray_gap", v).map(Some),
    }
}

impl Settings {
    pub const KEYS: &'static [&'static str] = &[
        "merge_radius",
        "grid",
        "bins",
        "tau_c",
        "tau_b",
        "omega",
        "delta_ray",
        "nms_radius",
        "boundary_frac",
        "kappa_min",
        "min_piece_len",
        "incidence_tol",
        "max_ray_gap",
        "tol_frac",
        "sweep",
        "weights",
        "rmax",
        "seed",
        "hough_rho_res",
        "hough_theta_res",
        "hough_threshold",
        "hough_min_length",
        "hough_max_gap",
    ];

    pub fn set(&mut self, key: &str, v: &str) -> CliResult<()> {
        match key {
            "merge_radius" => self.merge_radius = num(key, v)?,
            "grid" => self.grid = num(key, v)?,
            "bins" => self.bins = num(key, v)?,
            "tau_c" => self.tau_c = num(key, v)?,
            "tau_b" => self.tau_b = num(key, v)?,
            "omega" => self.omega = num(key, v)?,
            "delta_ray" => self.delta_ray = num(key, v)?,
            "nms_radius" => self.nms_radius = num(key, v)?,
            "boundary_frac" => self.boundary_frac = num(key, v)?,
            "kappa_min" => self.kappa_min = num(key, v)?,
            "min_piece_len" => self.min_piece_len = num(key, v)?,
            "incidence_tol" => self.incidence_tol = num(key, v)?,
            "max_ray_gap" => self.max_ray_gap = parse_gap(v)?,
            "tol_frac" => self.tol_frac = num(key, v)?,
            "sweep" => self.sweep = parse_sweep(v)?,
            "weights" => self.weights = parse_weights(v)?,
            "rmax" => self.rmax = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "hough_rho_res" => self.hough.rho_res = num(key, v)?,
            "hough_theta_res" => self.hough.theta_res = num(key, v)?,
            "hough_threshold" => self.hough.threshold = num(key, v)?,
            "hough_min_length" => self.hough.min_length = num(key, v)?,
            "hough_max_gap" => self.hough.max_gap = num(key, v)?,
            _ => return Err(usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are ignored.
    pub fn apply_config(&mut self, text: &str) -> CliResult<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(usage(format!(
                    "config line {}: expected key = value",
                    i + 1
                )));
            };
            self.set(k.trim(), v.trim())
                .map_err(|e| usage(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// Defaults overridden by the config file at `path`, if any.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let mut s = Self::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("reading config {}: {e}", p.display())))?;
            s.apply_config(&text)?;
        }
        Ok(s)
    }

    /// Every key with its current value, in config-file syntax.
    pub fn to_config_text(&self) -> String {
        let w = &self.weights;
        let gap = self
            .max_ray_gap
            .map_or("none".to_string(), |g| g.to_string());
        let values: Vec<String> = vec![
            self.merge_radius.to_string(),
            self.grid.to_string(),
            self.bins.to_string(),
            self.tau_c.to_string(),
            self.tau_b.to_string(),
            self.omega.to_string(),
            self.delta_ray.to_string(),
            self.nms_radius.to_string(),
            self.boundary_frac.to_string(),
            self.kappa_min.to_string(),
            self.min_piece_len.to_string(),
            self.incidence_tol.to_string(),
            gap,
            self.tol_frac.to_string(),
            format_sweep(&self.sweep),
            format!("{},{},{},{}", w.conf_c, w.loc_c, w.conf_b, w.loc_b),
            self.rmax.to_string(),
            self.seed.to_string(),
            self.hough.rho_res.to_string(),
            self.hough.theta_res.to_string(),
            self.hough.threshold.to_string(),
            self.hough.min_length.to_string(),
            self.hough.max_gap.to_string(),
        ];
        let mut out = String::new();
        for (k, v) in Self::KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn construction(&self) -> ConstructionParams {
        ConstructionParams {
            omega: self.omega,
            tau_c: self.tau_c,
            tau_b: self.tau_b,
            delta_ray: self.delta_ray,
            nms_radius: self.nms_radius,
            boundary_frac: self.boundary_frac,
            kappa_min: self.kappa_min,
            min_piece_len: self.min_piece_len,
            incidence_tol: self.incidence_tol,
            max_ray_gap: self.max_ray_gap,
        }
    }

    pub fn eval(&self) -> EvalConfig {
        EvalConfig {
            tolerance_frac: self.tol_frac,
            sweep: self.sweep.clone(),
        }
    }

    pub fn grid_for(&self, width: usize, height: usize) -> GridConfig {
        GridConfig {
            grid_h: self.grid,
            grid_w: self.grid,
            bins: self.bins,
            image_w: width,
            image_h: height,
        }
    }

    pub fn hough_params(&self) -> HoughParams {
        HoughParams {
            seed: self.seed,
            ..self.hough
        }
    }
}
