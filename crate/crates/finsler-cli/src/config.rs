//! JSON run configuration: model, sample box, tolerances, and check list.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use finsler::expr::parse;
use finsler::geometry::{FinslerModel, GuardExpr};
use finsler::verify::{default_checks, SampleSpec, ScanSpec, VerifyOptions};
use finsler::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    dimension: usize,
    metric: String,
    vector_field: Vec<String>,
    m: f64,
    /// Formulas that must stay positive on the sample box.
    #[serde(default)]
    domain: Vec<String>,
    sample: SampleSection,
    #[serde(default)]
    tolerances: Option<TolSection>,
    #[serde(default)]
    checks: Option<Vec<String>>,
    #[serde(default)]
    sigma: Option<f64>,
    #[serde(default)]
    phi_sign_normalization: Option<bool>,
    #[serde(default)]
    path: Option<PathSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleSection {
    /// Variable name ("x1".."xn", "y1".."yn") to [lo, hi].
    #[serde(rename = "box")]
    ranges: BTreeMap<String, [f64; 2]>,
    count: usize,
    seed: u64,
    #[serde(default = "default_max_attempts")]
    max_attempts: usize,
    #[serde(default = "default_guard_margin")]
    guard_margin: f64,
}

fn default_max_attempts() -> usize {
    2_000_000
}

fn default_guard_margin() -> f64 {
    1e-3
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TolSection {
    #[serde(default = "default_tol_derivative")]
    rel_derivative: f64,
    #[serde(default = "default_tol_algebraic")]
    rel_algebraic: f64,
    #[serde(default = "default_tol_fd")]
    rel_fd: f64,
}

fn default_tol_derivative() -> f64 {
    1e-6
}

fn default_tol_algebraic() -> f64 {
    1e-8
}

fn default_tol_fd() -> f64 {
    1e-4
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathSection {
    x: Vec<f64>,
    circle_axes: [usize; 2],
    windows: Vec<[f64; 2]>,
    samples_per_window: usize,
}

/// A fully parsed run setup.
pub struct Loaded {
    pub model: FinslerModel,
    pub spec: SampleSpec,
    pub opts: VerifyOptions,
    pub checks: Vec<String>,
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        reason: format!("cannot read {}: {e}", path.display()),
    })?;
    let cfg: ConfigFile = serde_json::from_str(&text).map_err(|e| Error::Config {
        reason: format!("{}: {e}", path.display()),
    })?;

    let n = cfg.dimension;
    let metric = parse(&cfg.metric, n)?;
    if cfg.vector_field.len() != n {
        return Err(Error::Config {
            reason: format!(
                "vector_field has {} components for dimension {n}",
                cfg.vector_field.len()
            ),
        });
    }
    let phi = cfg
        .vector_field
        .iter()
        .map(|s| parse(s, n))
        .collect::<Result<Vec<_>>>()?;
    let guards = cfg
        .domain
        .iter()
        .map(|s| parse(s, n).map(GuardExpr::Positive))
        .collect::<Result<Vec<_>>>()?;
    let model = FinslerModel::new(n, metric, phi, guards, cfg.m)?;

    let mut ranges = Vec::with_capacity(2 * n);
    for idx in 0..2 * n {
        let name = if idx < n {
            format!("x{}", idx + 1)
        } else {
            format!("y{}", idx - n + 1)
        };
        let r = cfg.sample.ranges.get(&name).ok_or_else(|| Error::Config {
            reason: format!("sample.box is missing variable {name}"),
        })?;
        ranges.push(*r);
    }
    if cfg.sample.ranges.len() != 2 * n {
        return Err(Error::Config {
            reason: format!(
                "sample.box names {} variables but the chart has {}",
                cfg.sample.ranges.len(),
                2 * n
            ),
        });
    }
    let spec = SampleSpec {
        ranges,
        count: cfg.sample.count,
        seed: cfg.sample.seed,
        max_attempts: cfg.sample.max_attempts,
        guard_margin: cfg.sample.guard_margin,
    };

    let mut opts = VerifyOptions::default();
    if let Some(t) = cfg.tolerances {
        opts.tol_derivative = t.rel_derivative;
        opts.tol_algebraic = t.rel_algebraic;
        opts.tol_fd = t.rel_fd;
    }
    if let Some(s) = cfg.sigma {
        opts.sigma = s;
    }
    if let Some(norm) = cfg.phi_sign_normalization {
        opts.normalize_phi_sign = norm;
    }
    if let Some(p) = cfg.path {
        opts.scan = Some(ScanSpec {
            x: p.x,
            circle_axes: p.circle_axes,
            windows: p.windows,
            samples_per_window: p.samples_per_window,
        });
    }

    let checks = cfg
        .checks
        .unwrap_or_else(|| default_checks(opts.scan.is_some()));

    Ok(Loaded {
        model,
        spec,
        opts,
        checks,
    })
}
