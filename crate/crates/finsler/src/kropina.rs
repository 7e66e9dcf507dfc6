//! The generalized Kropina-type metric change and its closed-form
//! transformation laws.
//!
//! Given a model (F, phi) with concurrent phi and a real exponent m (not 0,
//! not -1), the changed norm is Fhat = F^(m+1) |Phi|^(-m) where Phi is the
//! metric pairing of phi against y. This module provides:
//!
//! - [`fhat_model`]: the changed model, evaluable through the generic
//!   differentiation pipeline (the "direct" route),
//! - [`change_context`] + [`predicted`]: the closed-form transformation laws
//!   for every fundamental object (the "predicted" route),
//! - [`ar_pieces`]: the conformal-times-Riemann-type factorization of the
//!   changed fundamental tensor,
//! - [`degeneracy_scan`]: a sweep of D = m F^2 |phi|^2 - (m - 1) Phi^2 along
//!   a parametrized path, correlating its zeros with rank loss of the changed
//!   tensor.
//!
//! Sign conventions: the closed forms assume the field is normalized so its
//! horizontal derivative constant is -1 (callers negate the field when the
//! empirical constant is +1). All formulas below are written with the
//! positive prefactor W = (F^2/Phi^2)^m and the signed ratio w = F/Phi, so
//! they hold on both sign components of Phi.

use crate::concurrent::{field_scalars, metric_point_data};
use crate::error::{Error, Result};
use crate::geometry::{
    scalar_form_jet_from_energy, ChartPoint, FinslerModel, GeomEval, GuardExpr, MetricFn,
};
use crate::jet::{det_values, Jet, JetSpace};

fn validate_exponent(m: f64) -> Result<()> {
    if m.abs() < 1e-12 || (m + 1.0).abs() < 1e-12 {
        return Err(Error::InvalidModel {
            reason: format!("change exponent m = {m} must avoid 0 and -1"),
        });
    }
    Ok(())
}

/// Build the changed model. `phi_sign` is the sign of Phi on the component of
/// the admissible cone being worked on; it becomes a guard so samplers stay
/// off the locus where the change degenerates.
pub fn fhat_model(model: &FinslerModel, phi_sign: f64) -> Result<FinslerModel> {
    validate_exponent(model.m)?;
    if model.phi.is_empty() {
        return Err(Error::InvalidModel {
            reason: "metric change needs a vector field".into(),
        });
    }
    let mut guards = model.guards.clone();
    guards.push(GuardExpr::PhiSign(phi_sign));
    Ok(FinslerModel {
        dim: model.dim,
        metric: MetricFn::Changed {
            base: Box::new(model.clone()),
            m: model.m,
        },
        phi: model.phi.clone(),
        guards,
        m: model.m,
    })
}

/// Pointwise data the closed forms consume: field scalars, the denominator
/// D, the spray deformation coefficients and their fiber derivative jets.
pub struct ChangeContext {
    pub m: f64,
    pub f2: f64,
    pub f: f64,
    /// Signed Phi.
    pub phi: f64,
    pub norm_sq: f64,
    /// D = m F^2 |phi|^2 - (m - 1) Phi^2.
    pub d_value: f64,
    /// Psi1 = 2 m Phi F^2 / D.
    pub psi1: f64,
    /// Psi2 = m F^4 / D.
    pub psi2: f64,
    /// Order-2 jets of the two coefficients, for connection and curvature
    /// level predictions.
    pub psi1_jet: Jet,
    pub psi2_jet: Jet,
    pub phi_vec: Vec<f64>,
    pub phi_form: Vec<f64>,
    pub ell: Vec<f64>,
}

/// Assemble the closed-form context at `geom`'s point. `model` must be the
/// model `geom` was evaluated on (the base metric carrying the field).
pub fn change_context(model: &FinslerModel, geom: &GeomEval) -> Result<ChangeContext> {
    validate_exponent(model.m)?;
    let m = model.m;
    let n = geom.dim;
    let scalars = field_scalars(model, geom)?;
    let d_value = m * geom.f2 * scalars.norm_sq - (m - 1.0) * scalars.phi * scalars.phi;
    let d_scale = (m * geom.f2 * scalars.norm_sq)
        .abs()
        .max(((m - 1.0) * scalars.phi * scalars.phi).abs());
    if d_value.abs() <= 1e-12 * d_scale.max(1.0) {
        return Err(Error::DegenerateChange {
            point: geom.point.label(),
            what: format!("D = {d_value:.3e} vanishes"),
        });
    }
    let psi1 = 2.0 * m * scalars.phi * geom.f2 / d_value;
    let psi2 = m * geom.f2 * geom.f2 / d_value;

    // Jets of the same quantities, order 2.
    let order = 2;
    let space = JetSpace::get(2 * n, order);
    let f2_jet = geom.energy.truncate(order).scale(2.0);
    let phi_jet = scalar_form_jet_from_energy(model, &geom.energy, &geom.point)?.truncate(order);
    let comps = crate::geometry::field_component_jets(model, &geom.point, &space)?;
    let mut norm_jet = Jet::constant(&space, 0.0);
    for k in 0..n {
        for l in 0..n {
            let gkl = geom.g_jets[k][l].truncate(order);
            norm_jet = &norm_jet + &gkl.mul(&comps[k]).mul(&comps[l]);
        }
    }
    let d_jet = &(&f2_jet.mul(&norm_jet)).scale(m) - &(&phi_jet.mul(&phi_jet)).scale(m - 1.0);
    let psi1_jet = phi_jet
        .mul(&f2_jet)
        .scale(2.0 * m)
        .div(&d_jet)
        .map_err(|_| Error::DegenerateChange {
            point: geom.point.label(),
            what: "D vanishes".into(),
        })?;
    let psi2_jet =
        f2_jet
            .mul(&f2_jet)
            .scale(m)
            .div(&d_jet)
            .map_err(|_| Error::DegenerateChange {
                point: geom.point.label(),
                what: "D vanishes".into(),
            })?;

    Ok(ChangeContext {
        m,
        f2: geom.f2,
        f: geom.f,
        phi: scalars.phi,
        norm_sq: scalars.norm_sq,
        d_value,
        psi1,
        psi2,
        psi1_jet,
        psi2_jet,
        phi_vec: scalars.phi_vec,
        phi_form: scalars.phi_form,
        ell: geom.ell.clone(),
    })
}

/// Every changed object the closed forms predict at one point.
pub struct PredictedChange {
    pub f2: f64,
    pub ell: Vec<f64>,
    pub g: Vec<Vec<f64>>,
    pub hbar: Vec<Vec<f64>>,
    pub cartan: Vec<Vec<Vec<f64>>>,
    pub spray: Vec<f64>,
    pub nonlinear: Vec<Vec<f64>>,
}

/// Evaluate the closed-form transformation laws. `sigma` selects the sign of
/// the Psi2 fiber-derivative term in the nonlinear connection law; +1 is the
/// sign the derivation produces (passing -1 is how the verification suite
/// demonstrates the law is sign-sensitive).
pub fn predicted(geom: &GeomEval, ctx: &ChangeContext, sigma: f64) -> Result<PredictedChange> {
    let n = geom.dim;
    let m = ctx.m;
    if ctx.phi.abs() <= 1e-12 * ctx.f.max(1.0) {
        return Err(Error::DegenerateChange {
            point: geom.point.label(),
            what: "pairing against the vector field vanishes".into(),
        });
    }
    let ratio = ctx.f2 / (ctx.phi * ctx.phi);
    let w_big = ratio.powf(m);
    let w_sqrt = w_big.sqrt();
    let w = ctx.f / ctx.phi;

    let f2_hat = ctx.f2.powf(m + 1.0) * (ctx.phi * ctx.phi).powf(-m);

    let phi = &ctx.phi_form;
    let ell = &ctx.ell;

    let mut ell_hat = vec![0.0; n];
    for i in 0..n {
        ell_hat[i] = w_sqrt * ((m + 1.0) * ell[i] - m * w * phi[i]);
    }

    let mut g_hat = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            g_hat[i][j] = w_big
                * ((m + 1.0) * geom.g[i][j] + m * (2.0 * m + 1.0) * w * w * phi[i] * phi[j]
                    - 2.0 * m * (m + 1.0) * w * (phi[i] * ell[j] + phi[j] * ell[i])
                    + 2.0 * m * (m + 1.0) * ell[i] * ell[j]);
        }
    }

    let mut hbar_hat = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            hbar_hat[i][j] = (m + 1.0)
                * w_big
                * (geom.hbar[i][j]
                    + m * ell[i] * ell[j]
                    + m * w * (w * phi[i] * phi[j] - phi[i] * ell[j] - phi[j] * ell[i]));
        }
    }

    // Derivatives of the scalar prefactors along the fiber enter through the
    // common factor (ell_k / F - phi_k / Phi).
    let mut cartan_hat = vec![vec![vec![0.0; n]; n]; n];
    for k in 0..n {
        let slope = ell[k] / ctx.f - phi[k] / ctx.phi;
        let dw = 2.0 * m * w_big * slope;
        let dww2 = (2.0 * m + 2.0) * w_big * w * w * slope;
        let dww = (2.0 * m + 1.0) * w_big * w * slope;
        for i in 0..n {
            for j in 0..n {
                let from_tensors = (m + 1.0) * w_big * geom.cartan[i][j][k]
                    + m * (m + 1.0)
                        * (w_big / ctx.f)
                        * (geom.hbar[i][k] * ell[j] + geom.hbar[j][k] * ell[i])
                    - m * (m + 1.0)
                        * (w_big / ctx.phi)
                        * (geom.hbar[i][k] * phi[j] + geom.hbar[j][k] * phi[i]);
                let from_prefactors = 0.5
                    * ((m + 1.0) * dw * geom.g[i][j]
                        + m * (2.0 * m + 1.0) * dww2 * phi[i] * phi[j]
                        - 2.0 * m * (m + 1.0) * dww * (phi[i] * ell[j] + phi[j] * ell[i])
                        + 2.0 * m * (m + 1.0) * dw * ell[i] * ell[j]);
                cartan_hat[i][j][k] = from_tensors + from_prefactors;
            }
        }
    }

    let y = &geom.point.y;
    let mut spray_hat = vec![0.0; n];
    for i in 0..n {
        spray_hat[i] = geom.spray[i] + 0.5 * ctx.psi1 * y[i] - 0.5 * ctx.psi2 * ctx.phi_vec[i];
    }

    let nv = 2 * n;
    let e_y = |j: usize| {
        let mut e = vec![0usize; nv];
        e[n + j] = 1;
        e
    };
    let mut nonlinear_hat = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let d_psi1 = ctx.psi1_jet.partial(&e_y(j))?;
            let d_psi2 = ctx.psi2_jet.partial(&e_y(j))?;
            let kronecker = if i == j { 1.0 } else { 0.0 };
            nonlinear_hat[i][j] = geom.nonlinear[i][j]
                + 0.5 * (ctx.psi1 * kronecker + d_psi1 * y[i] - sigma * d_psi2 * ctx.phi_vec[i]);
        }
    }

    Ok(PredictedChange {
        f2: f2_hat,
        ell: ell_hat,
        g: g_hat,
        hbar: hbar_hat,
        cartan: cartan_hat,
        spray: spray_hat,
        nonlinear: nonlinear_hat,
    })
}

/// The factorization of the changed fundamental tensor into a conformal
/// factor and a simpler tensor: returns (zeta, a_ij) with zeta * a = g_hat.
pub fn ar_pieces(geom: &GeomEval, ctx: &ChangeContext) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = geom.dim;
    let m = ctx.m;
    if ctx.phi.abs() <= 1e-12 * ctx.f.max(1.0) {
        return Err(Error::DegenerateChange {
            point: geom.point.label(),
            what: "pairing against the vector field vanishes".into(),
        });
    }
    let w_big = (ctx.f2 / (ctx.phi * ctx.phi)).powf(m);
    let w = ctx.f / ctx.phi;
    let zeta = m * (m + 1.0) * w_big;
    let phi = &ctx.phi_form;
    let ell = &ctx.ell;
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = geom.g[i][j] / m
                + (2.0 * m + 1.0) / (m + 1.0) * w * w * phi[i] * phi[j]
                + 2.0 * ell[i] * ell[j]
                - 2.0 * w * (phi[i] * ell[j] + phi[j] * ell[i]);
        }
    }
    Ok((zeta, a))
}

/// One sample of the degeneracy sweep.
#[derive(Clone, Debug)]
pub struct ScanSample {
    pub t: f64,
    /// D at the sample.
    pub d_value: f64,
    /// Pointwise magnitude scale of D's two terms.
    pub d_scale: f64,
    /// Determinant of the changed fundamental tensor.
    pub det_ghat: f64,
}

#[derive(Clone, Debug)]
pub struct ScanOutcome {
    pub samples: Vec<ScanSample>,
    /// Parameter values in the scanned windows where D crosses zero,
    /// refined by bisection.
    pub roots: Vec<f64>,
}

/// Sweep D and det(g_hat) along `path` over the given parameter windows.
/// The windows must avoid zeros of Phi (where the change itself, not just
/// its regularity, breaks down).
pub fn degeneracy_scan(
    model: &FinslerModel,
    path: &dyn Fn(f64) -> ChartPoint,
    windows: &[(f64, f64)],
    per_window: usize,
) -> Result<ScanOutcome> {
    validate_exponent(model.m)?;
    let m = model.m;
    let changed = FinslerModel {
        dim: model.dim,
        metric: MetricFn::Changed {
            base: Box::new(model.clone()),
            m,
        },
        phi: model.phi.clone(),
        guards: Vec::new(),
        m,
    };

    let d_at = |t: f64| -> Result<(f64, f64)> {
        let p = path(t);
        let data = metric_point_data(model, &p)?;
        let term1 = m * data.f2 * data.norm_sq;
        let term2 = (m - 1.0) * data.phi * data.phi;
        Ok((term1 - term2, term1.abs().max(term2.abs())))
    };

    let mut samples = Vec::new();
    let mut roots = Vec::new();
    for &(lo, hi) in windows {
        if !(hi > lo) || per_window < 2 {
            return Err(Error::Config {
                reason: format!("bad scan window [{lo}, {hi}] or sample count {per_window}"),
            });
        }
        let mut prev: Option<(f64, f64)> = None;
        for s in 0..per_window {
            let t = lo + (hi - lo) * s as f64 / (per_window - 1) as f64;
            let (d_value, d_scale) = d_at(t)?;
            let ghat = crate::geometry::metric_values(&changed, &path(t))?;
            let det_ghat = det_values(&ghat);
            samples.push(ScanSample {
                t,
                d_value,
                d_scale,
                det_ghat,
            });
            if let Some((t_prev, d_prev)) = prev {
                if d_prev.signum() != d_value.signum() && d_prev != 0.0 && d_value != 0.0 {
                    roots.push(bisect_root(&d_at, t_prev, t)?);
                }
            }
            prev = Some((t, d_value));
        }
    }
    Ok(ScanOutcome { samples, roots })
}

fn bisect_root(d_at: &dyn Fn(f64) -> Result<(f64, f64)>, mut a: f64, mut b: f64) -> Result<f64> {
    let (mut da, _) = d_at(a)?;
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        let mid = 0.5 * (a + b);
        let (dm, _) = d_at(mid)?;
        if dm == 0.0 {
            return Ok(mid);
        }
        if da.signum() == dm.signum() {
            a = mid;
            da = dm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use approx::assert_relative_eq;

    fn example_model(m: f64) -> FinslerModel {
        let dim = 3;
        let metric = parse("sqrt((y1)^2 + (x1)^2*(y2)^3/y3)", dim).unwrap();
        let phi = vec![
            parse("x1", dim).unwrap(),
            parse("0", dim).unwrap(),
            parse("0", dim).unwrap(),
        ];
        FinslerModel::new(dim, metric, phi, Vec::new(), m).unwrap()
    }

    fn flat_model(m: f64) -> FinslerModel {
        let dim = 3;
        let metric = parse("sqrt(y1^2 + y2^2 + y3^2)", dim).unwrap();
        let phi = vec![
            parse("-x1", dim).unwrap(),
            parse("-x2", dim).unwrap(),
            parse("-x3", dim).unwrap(),
        ];
        FinslerModel::new(dim, metric, phi, Vec::new(), m).unwrap()
    }

    #[test]
    fn context_reference_values() {
        // At x1 = 2, y = (1, 2, 1), m = 2: F^2 = 33, Phi = 2, |phi|^2 = 4,
        // D = 2*33*4 - 1*4 = 260, Psi1 = 264/260, Psi2 = 2178/260.
        let model = example_model(2.0);
        let p = ChartPoint::new(vec![2.0, 0.3, -0.4], vec![1.0, 2.0, 1.0]);
        let geom = GeomEval::new(&model, &p, 4).unwrap();
        let ctx = change_context(&model, &geom).unwrap();
        assert_relative_eq!(ctx.d_value, 260.0, epsilon = 1e-9);
        assert_relative_eq!(ctx.psi1, 264.0 / 260.0, epsilon = 1e-11);
        assert_relative_eq!(ctx.psi2, 2178.0 / 260.0, epsilon = 1e-10);
        assert_relative_eq!(ctx.phi, 2.0, epsilon = 1e-11);
        assert_relative_eq!(ctx.norm_sq, 4.0, epsilon = 1e-11);
    }

    #[test]
    fn changed_norm_reference_value() {
        let model = example_model(2.0);
        let p = ChartPoint::new(vec![2.0, 0.3, -0.4], vec![1.0, 2.0, 1.0]);
        let hat = fhat_model(&model, 1.0).unwrap();
        let e = hat.energy_jet(&p, 2).unwrap();
        assert_relative_eq!(
            (2.0 * e.value()).sqrt(),
            33.0f64.powf(1.5) / 4.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn flat_anchor_predictions() {
        // Flat norm, inward field, m = 1, at x = (1,0,0), y = (-1,0,0):
        // Phi = 1, D = 1, Psi1 = 2, Psi2 = 1, ghat = diag(1,2,2),
        // ellhat = (-1,0,0), spray_hat = (-0.5, 0, 0).
        let model = flat_model(1.0);
        let p = ChartPoint::new(vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]);
        let geom = GeomEval::new(&model, &p, 4).unwrap();
        let ctx = change_context(&model, &geom).unwrap();
        assert_relative_eq!(ctx.phi, 1.0, epsilon = 1e-12);
        assert_relative_eq!(ctx.d_value, 1.0, epsilon = 1e-12);
        assert_relative_eq!(ctx.psi1, 2.0, epsilon = 1e-12);
        assert_relative_eq!(ctx.psi2, 1.0, epsilon = 1e-12);
        let pred = predicted(&geom, &ctx, 1.0).unwrap();
        let expect_g = [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(pred.g[i][j], expect_g[i][j], epsilon = 1e-12);
            }
        }
        assert_relative_eq!(pred.ell[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(pred.ell[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(pred.spray[0], -0.5, epsilon = 1e-12);
        assert_relative_eq!(pred.spray[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn predictions_match_direct_evaluation_flat() {
        // Predicted closed forms vs direct differentiation of the changed
        // norm, off-anchor, both Phi signs.
        let model = flat_model(1.0);
        let points = [
            ChartPoint::new(vec![1.0, 0.4, 0.7], vec![-1.0, -0.6, -1.2]),
            // mirrored fiber: Phi flips sign
            ChartPoint::new(vec![1.0, 0.4, 0.7], vec![1.0, 0.6, 1.2]),
        ];
        for p in &points {
            let geom = GeomEval::new(&model, p, 4).unwrap();
            let ctx = change_context(&model, &geom).unwrap();
            let pred = predicted(&geom, &ctx, 1.0).unwrap();
            let sign = ctx.phi.signum();
            let hat = fhat_model(&model, sign).unwrap();
            let direct = GeomEval::new(&hat, p, 4).unwrap();

            assert_relative_eq!(pred.f2, direct.f2, max_relative = 1e-11);
            for i in 0..3 {
                assert_relative_eq!(
                    pred.ell[i],
                    direct.ell[i],
                    max_relative = 1e-10,
                    epsilon = 1e-11
                );
                assert_relative_eq!(
                    pred.spray[i],
                    direct.spray[i],
                    max_relative = 1e-10,
                    epsilon = 1e-11
                );
                for j in 0..3 {
                    assert_relative_eq!(
                        pred.g[i][j],
                        direct.g[i][j],
                        max_relative = 1e-10,
                        epsilon = 1e-11
                    );
                    assert_relative_eq!(
                        pred.hbar[i][j],
                        direct.hbar[i][j],
                        max_relative = 1e-10,
                        epsilon = 1e-11
                    );
                    assert_relative_eq!(
                        pred.nonlinear[i][j],
                        direct.nonlinear[i][j],
                        max_relative = 1e-10,
                        epsilon = 1e-11
                    );
                    for k in 0..3 {
                        assert_relative_eq!(
                            pred.cartan[i][j][k],
                            direct.cartan[i][j][k],
                            max_relative = 1e-10,
                            epsilon = 1e-11
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn predictions_match_direct_evaluation_example() {
        // The worked model requires the normalization convention: its field
        // has constant +1, so the closed forms apply to the negated field.
        for m in [2.0, 0.5, -2.0] {
            let model = example_model(m).negate_phi();
            let p = ChartPoint::new(vec![1.7, 0.2, -0.3], vec![1.1, 1.6, 0.9]);
            let geom = GeomEval::new(&model, &p, 4).unwrap();
            let ctx = change_context(&model, &geom).unwrap();
            let pred = predicted(&geom, &ctx, 1.0).unwrap();
            let hat = fhat_model(&model, ctx.phi.signum()).unwrap();
            let direct = GeomEval::new(&hat, &p, 4).unwrap();
            for i in 0..3 {
                assert_relative_eq!(
                    pred.spray[i],
                    direct.spray[i],
                    max_relative = 1e-9,
                    epsilon = 1e-10
                );
                for j in 0..3 {
                    assert_relative_eq!(
                        pred.g[i][j],
                        direct.g[i][j],
                        max_relative = 1e-9,
                        epsilon = 1e-10
                    );
                    assert_relative_eq!(
                        pred.nonlinear[i][j],
                        direct.nonlinear[i][j],
                        max_relative = 1e-9,
                        epsilon = 1e-10
                    );
                }
            }
        }
    }

    #[test]
    fn wrong_sigma_breaks_the_connection_law() {
        let model = flat_model(1.0);
        let p = ChartPoint::new(vec![1.0, 0.4, 0.7], vec![-1.0, -0.6, -1.2]);
        let geom = GeomEval::new(&model, &p, 4).unwrap();
        let ctx = change_context(&model, &geom).unwrap();
        let pred = predicted(&geom, &ctx, -1.0).unwrap();
        let hat = fhat_model(&model, 1.0).unwrap();
        let direct = GeomEval::new(&hat, &p, 4).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((pred.nonlinear[i][j] - direct.nonlinear[i][j]).abs());
            }
        }
        assert!(worst > 1e-2, "sign flip must be visible, worst = {worst}");
    }

    #[test]
    fn factorization_reassembles_the_changed_tensor() {
        let model = flat_model(2.0);
        let p = ChartPoint::new(vec![0.9, 1.2, 0.5], vec![-0.8, -1.1, -0.9]);
        let geom = GeomEval::new(&model, &p, 4).unwrap();
        let ctx = change_context(&model, &geom).unwrap();
        let pred = predicted(&geom, &ctx, 1.0).unwrap();
        let (zeta, a) = ar_pieces(&geom, &ctx).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(
                    zeta * a[i][j],
                    pred.g[i][j],
                    max_relative = 1e-11,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn determinant_identity() {
        // det ghat = (m+1)^(n-1) (F^2/Phi^2)^(mn) det g * D / Phi^2.
        for (model, p) in [
            (
                flat_model(2.0),
                ChartPoint::new(vec![0.9, 1.2, 0.5], vec![-0.8, -1.1, -0.9]),
            ),
            (
                example_model(0.5).negate_phi(),
                ChartPoint::new(vec![1.7, 0.2, -0.3], vec![1.1, 1.6, 0.9]),
            ),
        ] {
            let geom = GeomEval::new(&model, &p, 4).unwrap();
            let ctx = change_context(&model, &geom).unwrap();
            let pred = predicted(&geom, &ctx, 1.0).unwrap();
            let n = 3.0;
            let m = ctx.m;
            let expect = (m + 1.0).powf(n - 1.0)
                * (ctx.f2 / (ctx.phi * ctx.phi)).powf(m * n)
                * det_values(&geom.g)
                * ctx.d_value
                / (ctx.phi * ctx.phi);
            assert_relative_eq!(det_values(&pred.g), expect, max_relative = 1e-9);
        }
    }

    #[test]
    fn degenerate_denominator_is_an_error() {
        // m = -2 on the flat model: D = -2 F^2 |x|^2 + 3 Phi^2 vanishes when
        // Phi^2 = (2/3) F^2 |x|^2. Align y against x and scale to hit it.
        let model = flat_model(-2.0);
        let cos2 = (2.0f64 / 3.0).sqrt();
        let theta = cos2.acos();
        let p = ChartPoint::new(vec![1.0, 0.0, 0.0], vec![-theta.cos(), -theta.sin(), 0.0]);
        let geom = GeomEval::new(&model, &p, 4).unwrap();
        let err = change_context(&model, &geom);
        assert!(matches!(err, Err(Error::DegenerateChange { .. })));
    }

    #[test]
    fn invalid_exponents_rejected() {
        let model = flat_model(0.0);
        assert!(matches!(
            fhat_model(&model, 1.0),
            Err(Error::InvalidModel { .. })
        ));
        let model = flat_model(-1.0);
        assert!(matches!(
            fhat_model(&model, 1.0),
            Err(Error::InvalidModel { .. })
        ));
    }

    #[test]
    fn scan_finds_the_degeneracy_roots() {
        // Circle path y(t) = (cos t, sin t, 0) at x = (1,0,0), m = -2:
        // D(t) = -2 + 3 cos^2 t, roots at cos^2 t = 2/3.
        let model = flat_model(-2.0);
        let path = |t: f64| ChartPoint::new(vec![1.0, 0.0, 0.0], vec![t.cos(), t.sin(), 0.0]);
        let windows = [(0.10, 0.85), (2.2916, 3.0416)];
        let outcome = degeneracy_scan(&model, &path, &windows, 60).unwrap();
        assert_eq!(outcome.roots.len(), 2, "roots: {:?}", outcome.roots);
        for root in &outcome.roots {
            let c2 = root.cos().powi(2);
            assert_relative_eq!(c2, 2.0 / 3.0, epsilon = 1e-9);
        }
        // correlation: tiny D iff tiny det(ghat) within the windows
        for s in &outcome.samples {
            if s.d_value.abs() > 0.1 * s.d_scale.max(1e-30) {
                assert!(
                    s.det_ghat.abs() > 1e-3,
                    "t = {}: D = {} but det = {}",
                    s.t,
                    s.d_value,
                    s.det_ghat
                );
            }
            if s.d_value.abs() < 1e-4 * s.d_scale.max(1e-30) {
                assert!(s.det_ghat.abs() < 1e-4);
            }
        }
    }
}
