//! Concurrent vector fields.
//!
//! A vector field phi on the base is concurrent for a Finsler metric when its
//! Berwald horizontal covariant derivative is a constant multiple of the
//! identity, its vertical derivative vanishes, and it annihilates the Cartan
//! torsion. [`check_concurrent`] estimates the constant and measures all three
//! residuals over a point sample; [`lemma_suite`] evaluates the differential
//! identities that follow for the scalar pairing Phi.

use crate::error::{Error, Result};
use crate::geometry::{
    field_component_jets, scalar_form_jet_from_energy, ChartPoint, FinslerModel, GeomEval,
};
use crate::jet::{Jet, JetSpace};

/// Pointwise scalars attached to the vector field.
#[derive(Clone, Debug)]
pub struct FieldScalars {
    /// Contravariant components phi^i.
    pub phi_vec: Vec<f64>,
    /// Covariant components phi_i = g_ij phi^j.
    pub phi_form: Vec<f64>,
    /// Phi = phi_i y^i.
    pub phi: f64,
    /// g(phi, phi).
    pub norm_sq: f64,
}

pub fn field_scalars(model: &FinslerModel, geom: &GeomEval) -> Result<FieldScalars> {
    if model.phi.is_empty() {
        return Err(Error::InvalidModel {
            reason: "model has no vector field".into(),
        });
    }
    let n = geom.dim;
    let phi_vec: Vec<f64> = model
        .phi
        .iter()
        .map(|e| e.eval(&geom.point.x, &geom.point.y))
        .collect::<Result<_>>()?;
    let mut phi_form = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            phi_form[i] += geom.g[i][j] * phi_vec[j];
        }
    }
    let mut phi = 0.0;
    let mut norm_sq = 0.0;
    for i in 0..n {
        phi += phi_form[i] * geom.point.y[i];
        norm_sq += phi_form[i] * phi_vec[i];
    }
    Ok(FieldScalars {
        phi_vec,
        phi_form,
        phi,
        norm_sq,
    })
}

/// Result of probing whether the model's vector field is concurrent.
#[derive(Clone, Debug)]
pub struct ConcurrencyReport {
    pub points: usize,
    /// Estimated constant (mean diagonal of the horizontal derivative at the
    /// first sample point).
    pub c: f64,
    /// max |phi^i_|j - c delta^i_j| over all points and entries.
    pub h_residual: f64,
    /// max |d phi^i / d y^j|.
    pub v_residual: f64,
    /// max |phi^r C_rij|.
    pub cartan_residual: f64,
    /// All three residuals within tolerance.
    pub concurrent: bool,
    /// |c| is 1 within tolerance (the convention the change theory assumes,
    /// up to the sign of the field).
    pub unit_constant: bool,
    pub tol: f64,
}

/// Measure the concurrency residuals of `model.phi` over the given points.
pub fn check_concurrent(
    model: &FinslerModel,
    points: &[ChartPoint],
    tol: f64,
) -> Result<ConcurrencyReport> {
    if points.is_empty() {
        return Err(Error::Config {
            reason: "concurrency check needs at least one point".into(),
        });
    }
    let n = model.dim;
    let mut c = 0.0;
    let mut h_residual: f64 = 0.0;
    let mut v_residual: f64 = 0.0;
    let mut cartan_residual: f64 = 0.0;

    for (pt_idx, p) in points.iter().enumerate() {
        let geom = GeomEval::new(model, p, 4)?;
        let space = JetSpace::get(2 * n, 1);
        let comps = field_component_jets(model, p, &space)?;
        let hcov = geom.hcov_field(&comps)?;
        let vder = geom.vderiv_field(&comps)?;
        let scalars = field_scalars(model, &geom)?;

        if pt_idx == 0 {
            c = (0..n).map(|i| hcov[i][i]).sum::<f64>() / n as f64;
        }
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { c } else { 0.0 };
                h_residual = h_residual.max((hcov[i][j] - target).abs());
                v_residual = v_residual.max(vder[i][j].abs());
                let mut contracted = 0.0;
                for (r, phi_r) in scalars.phi_vec.iter().enumerate() {
                    contracted += phi_r * geom.cartan[r][i][j];
                }
                cartan_residual = cartan_residual.max(contracted.abs());
            }
        }
    }

    Ok(ConcurrencyReport {
        points: points.len(),
        c,
        h_residual,
        v_residual,
        cartan_residual,
        concurrent: h_residual <= tol && v_residual <= tol && cartan_residual <= tol,
        unit_constant: (c.abs() - 1.0).abs() <= tol,
        tol,
    })
}

/// One named identity residual: compare `abs_err` against a tolerance scaled
/// by `scale`.
#[derive(Clone, Debug)]
pub struct IdentityResidual {
    pub name: &'static str,
    pub abs_err: f64,
    pub scale: f64,
}

impl IdentityResidual {
    pub fn rel_err(&self) -> f64 {
        self.abs_err / self.scale.max(1.0)
    }
}

/// Evaluate the differential identities a concurrent field with constant `c`
/// satisfies at one point:
///
/// - `a`: the fiber derivative of Phi is the covariant field,
/// - `c-horizontal`: delta_j Phi = c F ell_j,
/// - `c-spray`: the spray derivative of Phi is c F^2,
/// - `d`: delta_j F = 0,
/// - `e`: the horizontal derivative of ell contracts to zero against y,
/// - `f`: the chain rule for F^2/Phi through (F, Phi),
/// - `norm-vertical`: g(phi, phi) has no fiber dependence.
pub fn lemma_suite(
    model: &FinslerModel,
    point: &ChartPoint,
    c: f64,
) -> Result<Vec<IdentityResidual>> {
    let n = model.dim;
    let nv = 2 * n;
    let geom = GeomEval::new(model, point, 4)?;
    let scalars = field_scalars(model, &geom)?;
    // Phi as a jet of order 3 (one below the master order).
    let phi_jet = scalar_form_jet_from_energy(model, &geom.energy, point)?;

    let e_y = |j: usize| {
        let mut e = vec![0usize; nv];
        e[n + j] = 1;
        e
    };

    let mut out = Vec::new();

    // a: d Phi / d y^j = phi_j
    {
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..n {
            let lhs = phi_jet.partial(&e_y(j))?;
            err = err.max((lhs - scalars.phi_form[j]).abs());
            scale = scale.max(scalars.phi_form[j].abs());
        }
        out.push(IdentityResidual {
            name: "a",
            abs_err: err,
            scale,
        });
    }

    // c-horizontal: delta_j Phi - c F ell_j = 0
    {
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..n {
            let lhs = geom.delta_scalar(&phi_jet, j)?;
            let rhs = c * geom.f * geom.ell[j];
            err = err.max((lhs - rhs).abs());
            scale = scale.max(rhs.abs());
        }
        out.push(IdentityResidual {
            name: "c-horizontal",
            abs_err: err,
            scale: scale.max(geom.f),
        });
    }

    // c-spray: y^j dPhi/dx^j - 2 G^j dPhi/dy^j = c F^2
    {
        let mut lhs = 0.0;
        for j in 0..n {
            let mut e = vec![0usize; nv];
            e[j] = 1;
            lhs += point.y[j] * phi_jet.partial(&e)?;
            lhs -= 2.0 * geom.spray[j] * phi_jet.partial(&e_y(j))?;
        }
        out.push(IdentityResidual {
            name: "c-spray",
            abs_err: (lhs - c * geom.f2).abs(),
            scale: geom.f2,
        });
    }

    // d: delta_j F = 0
    {
        let mut err: f64 = 0.0;
        for j in 0..n {
            err = err.max(geom.delta_scalar(&geom.f_jet, j)?.abs());
        }
        out.push(IdentityResidual {
            name: "d",
            abs_err: err,
            scale: geom.f,
        });
    }

    // e: y^j (delta_j ell_i - ell_k G^k_ij) = 0
    {
        let mut err: f64 = 0.0;
        let scale = geom.ell.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                let mut term = geom.delta_scalar(&geom.ell_jets[i], j)?;
                for k in 0..n {
                    term -= geom.ell[k] * geom.berwald[k][i][j];
                }
                acc += point.y[j] * term;
            }
            err = err.max(acc.abs());
        }
        out.push(IdentityResidual {
            name: "e",
            abs_err: err,
            scale,
        });
    }

    // f: for f = F^2 / Phi, d f / d y^j = (2F/Phi) ell_j - (F^2/Phi^2) phi_j
    {
        let f2_jet = geom.energy.truncate(3).scale(2.0);
        let quot = f2_jet
            .div(&phi_jet)
            .map_err(|e| e.annotate(|| format!("F^2/Phi at {}", point.label())))?;
        let f_f = 2.0 * geom.f / scalars.phi;
        let f_phi = -geom.f2 / (scalars.phi * scalars.phi);
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..n {
            let lhs = quot.partial(&e_y(j))?;
            let rhs = f_f * geom.ell[j] + f_phi * scalars.phi_form[j];
            err = err.max((lhs - rhs).abs());
            scale = scale.max(lhs.abs());
        }
        out.push(IdentityResidual {
            name: "f",
            abs_err: err,
            scale,
        });
    }

    // norm-vertical: d g(phi, phi) / d y^j = 0
    {
        let order = geom.g_jets[0][0].order();
        let space = JetSpace::get(nv, order);
        let comps = field_component_jets(model, point, &space)?;
        let mut norm_jet = Jet::constant(&space, 0.0);
        for k in 0..n {
            for l in 0..n {
                let term = geom.g_jets[k][l].truncate(order);
                norm_jet = &norm_jet + &term.mul(&comps[k]).mul(&comps[l]);
            }
        }
        let mut err: f64 = 0.0;
        for j in 0..n {
            err = err.max(norm_jet.partial(&e_y(j))?.abs());
        }
        out.push(IdentityResidual {
            name: "norm-vertical",
            abs_err: err,
            scale: scalars.norm_sq.abs(),
        });
    }

    Ok(out)
}

/// Metric-level data at one point without the spray pipeline, cheap enough
/// for dense scans and sampling predicates.
#[derive(Clone, Debug)]
pub struct MetricPointData {
    pub g: Vec<Vec<f64>>,
    pub f2: f64,
    pub phi: f64,
    pub norm_sq: f64,
    pub phi_vec: Vec<f64>,
    pub phi_form: Vec<f64>,
}

pub fn metric_point_data(model: &FinslerModel, point: &ChartPoint) -> Result<MetricPointData> {
    let n = model.dim;
    let energy = model.energy_jet(point, 2)?;
    let f2 = 2.0 * energy.value();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut e = vec![0usize; 2 * n];
            e[n + i] += 1;
            e[n + j] += 1;
            g[i][j] = energy.partial(&e)?;
        }
    }
    let phi_vec: Vec<f64> = model
        .phi
        .iter()
        .map(|ex| ex.eval(&point.x, &point.y))
        .collect::<Result<_>>()?;
    if phi_vec.len() != n {
        return Err(Error::InvalidModel {
            reason: "model has no vector field".into(),
        });
    }
    let mut phi_form = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            phi_form[i] += g[i][j] * phi_vec[j];
        }
    }
    let mut phi = 0.0;
    let mut norm_sq = 0.0;
    for i in 0..n {
        phi += phi_form[i] * point.y[i];
        norm_sq += phi_form[i] * phi_vec[i];
    }
    Ok(MetricPointData {
        g,
        f2,
        phi,
        norm_sq,
        phi_vec,
        phi_form,
    })
}
