//! Finsler models and the point evaluation pipeline.
//!
//! A model is a norm function F(x, y) on a chart, an optional vector field
//! on the base (components depending on x only), and admissibility guards.
//! [`GeomEval`] differentiates the energy E = F^2/2 at one point, to one
//! master order, and extracts every fundamental object from the resulting
//! jets: fundamental tensor, angular metric, Cartan torsion, geodesic spray,
//! nonlinear connection, Berwald connection, and curvature.
//!
//! Variable layout inside jets: a chart of dimension n uses 2n jet variables,
//! `0..n` for x and `n..2n` for y.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Axis, Expr};
use crate::jet::{invert_values, solve_linear, Jet, JetSpace};

/// A position and a direction in one chart.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ChartPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> ChartPoint {
        assert_eq!(x.len(), y.len(), "x and y must have matching dimension");
        ChartPoint { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Compact rendering for error messages and reports.
    pub fn label(&self) -> String {
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|c| format!("{c:.6}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!("x=({}); y=({})", fmt(&self.x), fmt(&self.y))
    }
}

/// How the norm function of a model is defined.
#[derive(Clone, Debug)]
pub enum MetricFn {
    /// F given directly as a formula in x, y.
    Expr(Expr),
    /// The deformed norm built from a base model carrying a vector field:
    /// Fhat^2 = (F^2)^(m+1) (Phi^2)^(-m), with Phi the metric pairing of the
    /// field against y. Even in Phi, so both sign components are covered.
    Changed { base: Box<FinslerModel>, m: f64 },
}

/// Admissibility conditions a sampled point must satisfy.
#[derive(Clone, Debug)]
pub enum GuardExpr {
    /// The formula must evaluate above the margin.
    Positive(Expr),
    /// sign * Phi must exceed the margin (Phi from the base metric).
    PhiSign(f64),
}

/// A Finsler metric on one chart, with an optional vector field.
#[derive(Clone, Debug)]
pub struct FinslerModel {
    pub dim: usize,
    pub metric: MetricFn,
    /// Vector field components, functions of x only; empty when absent.
    pub phi: Vec<Expr>,
    pub guards: Vec<GuardExpr>,
    /// Deformation exponent used when this model is changed.
    pub m: f64,
}

impl FinslerModel {
    pub fn new(
        dim: usize,
        metric: Expr,
        phi: Vec<Expr>,
        guards: Vec<GuardExpr>,
        m: f64,
    ) -> Result<FinslerModel> {
        if dim == 0 {
            return Err(Error::InvalidModel {
                reason: "dimension must be at least 1".into(),
            });
        }
        if !phi.is_empty() && phi.len() != dim {
            return Err(Error::InvalidModel {
                reason: format!(
                    "vector field has {} components on a {dim}-dimensional chart",
                    phi.len()
                ),
            });
        }
        for (i, comp) in phi.iter().enumerate() {
            if comp.uses_axis(Axis::Y) {
                return Err(Error::InvalidModel {
                    reason: format!(
                        "vector field component {} depends on fiber variables: `{comp}`",
                        i + 1
                    ),
                });
            }
        }
        Ok(FinslerModel {
            dim,
            metric: MetricFn::Expr(metric),
            phi,
            guards,
            m,
        })
    }

    /// The model whose vector field is negated (norm and guards unchanged).
    pub fn negate_phi(&self) -> FinslerModel {
        let mut out = self.clone();
        out.phi = self
            .phi
            .iter()
            .map(|e| Expr::Neg(Box::new(e.clone())))
            .collect();
        out
    }

    /// The model whose metric the vector field pairs against: the base of a
    /// changed metric, otherwise the model itself.
    pub fn change_base(&self) -> &FinslerModel {
        match &self.metric {
            MetricFn::Expr(_) => self,
            MetricFn::Changed { base, .. } => base,
        }
    }

    /// Jet of the energy E = F^2/2 at `point`, to total order `order`.
    pub fn energy_jet(&self, point: &ChartPoint, order: usize) -> Result<Jet> {
        if point.dim() != self.dim {
            return Err(Error::IndexOutOfRange {
                what: format!(
                    "point of dimension {} on a {}-dimensional chart",
                    point.dim(),
                    self.dim
                ),
            });
        }
        match &self.metric {
            MetricFn::Expr(f_expr) => {
                let (xs, ys) = chart_seeds(self.dim, point, order);
                let f = f_expr.eval(&xs, &ys)?;
                if !(f.value() > 0.0) {
                    return Err(Error::Domain {
                        what: format!(
                            "norm must be positive at {}, got {:.6e}",
                            point.label(),
                            f.value()
                        ),
                        expr: Some(f_expr.to_string()),
                    });
                }
                Ok((&f * &f).scale(0.5))
            }
            MetricFn::Changed { base, m } => {
                // F^2 and Phi at this order come from the base energy one
                // order higher (Phi = phi^k dE/dy^k by homogeneity).
                let energy = base.energy_jet(point, order + 1)?;
                let f2 = energy.truncate(order).scale(2.0);
                let phi = scalar_form_jet_from_energy(base, &energy, point)?;
                let phi2 = &phi * &phi;
                let degenerate = |e: Error| match e {
                    Error::Domain { .. } | Error::DivisionBySingularJet { .. } => {
                        Error::DegenerateChange {
                            point: point.label(),
                            what: format!(
                                "pairing against the vector field vanishes (value {:.6e})",
                                phi.value()
                            ),
                        }
                    }
                    other => other,
                };
                let num = f2.pow_real(m + 1.0)?;
                let den = phi2.pow_real(-m).map_err(degenerate)?;
                Ok((&num * &den).scale(0.5))
            }
        }
    }

    /// Do all admissibility guards hold at `point` with the given margin?
    /// Guards that fail to evaluate count as violated.
    pub fn guards_ok(&self, point: &ChartPoint, margin: f64) -> bool {
        for guard in &self.guards {
            match guard {
                GuardExpr::Positive(e) => match e.eval(&point.x, &point.y) {
                    Ok(v) if v > margin => {}
                    _ => return false,
                },
                GuardExpr::PhiSign(sign) => {
                    let base = self.change_base();
                    match scalar_form_value(base, point) {
                        Ok(phi) if sign * phi > margin => {}
                        _ => return false,
                    }
                }
            }
        }
        true
    }
}

/// Jet seeds for all 2n chart variables at a point.
pub fn chart_seeds(dim: usize, point: &ChartPoint, order: usize) -> (Vec<Jet>, Vec<Jet>) {
    let space = JetSpace::get(2 * dim, order);
    let xs = (0..dim)
        .map(|i| Jet::variable(&space, i, point.x[i]).unwrap())
        .collect();
    let ys = (0..dim)
        .map(|i| Jet::variable(&space, dim + i, point.y[i]).unwrap())
        .collect();
    (xs, ys)
}

/// Components of the model's vector field as jets in the given space.
pub fn field_component_jets(
    model: &FinslerModel,
    point: &ChartPoint,
    space: &Arc<JetSpace>,
) -> Result<Vec<Jet>> {
    if model.phi.is_empty() {
        return Err(Error::InvalidModel {
            reason: "model has no vector field".into(),
        });
    }
    let dim = model.dim;
    let xs: Vec<Jet> = (0..dim)
        .map(|i| Jet::variable(space, i, point.x[i]).unwrap())
        .collect();
    let ys: Vec<Jet> = (0..dim)
        .map(|i| Jet::variable(space, dim + i, point.y[i]).unwrap())
        .collect();
    model.phi.iter().map(|e| e.eval(&xs, &ys)).collect()
}

/// Phi = g_kl phi^k y^l as a jet, built from an energy jet one order higher
/// (g_kl y^l = dE/dy^k for 2-homogeneous E, so no second derivatives needed).
pub fn scalar_form_jet_from_energy(
    model: &FinslerModel,
    energy: &Jet,
    point: &ChartPoint,
) -> Result<Jet> {
    let order = energy.order() - 1;
    let space = JetSpace::get(2 * model.dim, order);
    let comps = field_component_jets(model, point, &space)?;
    let mut acc = Jet::constant(&space, 0.0);
    for (k, comp) in comps.iter().enumerate() {
        let de = energy.derive(model.dim + k)?;
        acc = &acc + &comp.mul(&de);
    }
    Ok(acc)
}

/// Jet of Phi for the model's own metric, to the requested order.
pub fn scalar_form_jet(model: &FinslerModel, point: &ChartPoint, order: usize) -> Result<Jet> {
    let energy = model.energy_jet(point, order + 1)?;
    scalar_form_jet_from_energy(model, &energy, point)
}

/// Value of Phi at a point (cheap: first-order jets only).
pub fn scalar_form_value(model: &FinslerModel, point: &ChartPoint) -> Result<f64> {
    Ok(scalar_form_jet(model, point, 0)?.value())
}

/// Multi-index with a single 1 at `var`, in a `2 dim`-variable space.
fn unit_index(n_vars: usize, var: usize) -> Vec<usize> {
    let mut e = vec![0usize; n_vars];
    e[var] = 1;
    e
}

fn unit_index2(n_vars: usize, a: usize, b: usize) -> Vec<usize> {
    let mut e = vec![0usize; n_vars];
    e[a] += 1;
    e[b] += 1;
    e
}

fn unit_index3(n_vars: usize, a: usize, b: usize, c: usize) -> Vec<usize> {
    let mut e = vec![0usize; n_vars];
    e[a] += 1;
    e[b] += 1;
    e[c] += 1;
    e
}

/// The fundamental objects that need only low-order fiber derivatives.
#[derive(Clone, Debug)]
pub struct Forms {
    pub f2: f64,
    pub f: f64,
    pub g: Vec<Vec<f64>>,
    pub g_inv: Vec<Vec<f64>>,
    pub ell: Vec<f64>,
    pub hbar: Vec<Vec<f64>>,
    pub cartan: Vec<Vec<Vec<f64>>>,
}

/// Fundamental tensor, angular metric, unit covector, Cartan torsion at one
/// point, from a third-order energy jet.
pub fn fundamental_forms(model: &FinslerModel, point: &ChartPoint) -> Result<Forms> {
    let n = model.dim;
    let nv = 2 * n;
    let energy = model.energy_jet(point, 3)?;
    let f2 = 2.0 * energy.value();
    if !(f2 > 0.0) {
        return Err(Error::Domain {
            what: format!("norm vanishes at {}", point.label()),
            expr: None,
        });
    }
    let f = f2.sqrt();
    let mut g = vec![vec![0.0; n]; n];
    let mut cartan = vec![vec![vec![0.0; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = energy.partial(&unit_index2(nv, n + i, n + j))?;
            for k in 0..n {
                cartan[i][j][k] = 0.5 * energy.partial(&unit_index3(nv, n + i, n + j, n + k))?;
            }
        }
    }
    let g_inv = invert_values(&g).map_err(|_| Error::SingularMetric {
        point: point.label(),
    })?;
    let mut ell = vec![0.0; n];
    for i in 0..n {
        let de = energy.partial(&unit_index(nv, n + i))?;
        ell[i] = de / f;
    }
    let mut hbar = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            hbar[i][j] = g[i][j] - ell[i] * ell[j];
        }
    }
    Ok(Forms {
        f2,
        f,
        g,
        g_inv,
        ell,
        hbar,
        cartan,
    })
}

/// Just the fundamental tensor values (second-order jet, no inversion), for
/// scans that must tolerate degenerate metrics.
pub fn metric_values(model: &FinslerModel, point: &ChartPoint) -> Result<Vec<Vec<f64>>> {
    let n = model.dim;
    let nv = 2 * n;
    let energy = model.energy_jet(point, 2)?;
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = energy.partial(&unit_index2(nv, n + i, n + j))?;
        }
    }
    Ok(g)
}

/// Full single-point evaluation: every fundamental object of the model at one
/// point, plus the jets downstream consumers differentiate further.
pub struct GeomEval {
    pub dim: usize,
    pub order: usize,
    pub point: ChartPoint,
    /// E = F^2/2 at the master order.
    pub energy: Jet,
    /// F itself at the master order.
    pub f_jet: Jet,
    pub f2: f64,
    pub f: f64,
    /// g_ij jets, order - 2.
    pub g_jets: Vec<Vec<Jet>>,
    /// Unit covector jets, order - 1.
    pub ell_jets: Vec<Jet>,
    /// Spray coefficient jets G^i, order - 2.
    pub spray_jets: Vec<Jet>,
    /// Nonlinear connection jets N^i_j, order - 3.
    pub nonlinear_jets: Vec<Vec<Jet>>,
    pub g: Vec<Vec<f64>>,
    pub g_inv: Vec<Vec<f64>>,
    pub ell: Vec<f64>,
    pub hbar: Vec<Vec<f64>>,
    /// Cartan torsion C_ijk (fully covariant).
    pub cartan: Vec<Vec<Vec<f64>>>,
    pub spray: Vec<f64>,
    /// N^i_j values.
    pub nonlinear: Vec<Vec<f64>>,
    /// Berwald connection G^i_jk values.
    pub berwald: Vec<Vec<Vec<f64>>>,
    /// Curvature R^i_jk of the nonlinear connection.
    pub curvature: Vec<Vec<Vec<f64>>>,
}

impl GeomEval {
    /// Evaluate at one point. `order` must be at least 4 so that curvature
    /// and the Berwald connection are available.
    pub fn new(model: &FinslerModel, point: &ChartPoint, order: usize) -> Result<GeomEval> {
        if order < 4 {
            return Err(Error::IndexOutOfRange {
                what: format!("evaluation order {order} (need at least 4)"),
            });
        }
        let n = model.dim;
        let nv = 2 * n;
        let energy = model.energy_jet(point, order)?;
        let f2 = 2.0 * energy.value();
        if !(f2 > 0.0) {
            return Err(Error::Domain {
                what: format!("norm vanishes at {}", point.label()),
                expr: None,
            });
        }
        let f = f2.sqrt();
        let f_jet = energy.scale(2.0).sqrt()?;

        let mut g_jets: Vec<Vec<Jet>> = vec![Vec::new(); n];
        let dy: Vec<Jet> = (0..n)
            .map(|i| energy.derive(n + i))
            .collect::<Result<_>>()?;
        for i in 0..n {
            for j in 0..n {
                if j < i {
                    let mirrored = g_jets[j][i].clone();
                    g_jets[i].push(mirrored);
                } else {
                    g_jets[i].push(dy[i].derive(n + j)?);
                }
            }
        }

        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                g[i][j] = g_jets[i][j].value();
            }
        }
        let g_inv = invert_values(&g).map_err(|_| Error::SingularMetric {
            point: point.label(),
        })?;

        let ell_jets: Vec<Jet> = (0..n).map(|i| f_jet.derive(n + i)).collect::<Result<_>>()?;
        let ell: Vec<f64> = ell_jets.iter().map(|j| j.value()).collect();

        let mut hbar = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                hbar[i][j] = g[i][j] - ell[i] * ell[j];
            }
        }

        let mut cartan = vec![vec![vec![0.0; n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    cartan[i][j][k] =
                        0.5 * energy.partial(&unit_index3(nv, n + i, n + j, n + k))?;
                }
            }
        }

        // Spray: 2 g_il G^l = y^k d^2 E / dx^k dy^i - dE/dx^i.
        let rhs_order = order - 2;
        let rhs_space = JetSpace::get(nv, rhs_order);
        let y_seeds: Vec<Jet> = (0..n)
            .map(|k| Jet::variable(&rhs_space, n + k, point.y[k]).unwrap())
            .collect();
        let mut rhs: Vec<Vec<Jet>> = Vec::with_capacity(n);
        for l in 0..n {
            let mut acc = Jet::constant(&rhs_space, 0.0);
            for (k, y_k) in y_seeds.iter().enumerate() {
                let mixed = energy.derive(k)?.derive(n + l)?;
                acc = &acc + &y_k.mul(&mixed);
            }
            let dx = energy.derive(l)?.truncate(rhs_order);
            rhs.push(vec![&acc - &dx]);
        }
        let sol = solve_linear(&g_jets, &rhs).map_err(|_| Error::SingularMetric {
            point: point.label(),
        })?;
        let spray_jets: Vec<Jet> = sol.into_iter().map(|row| row[0].scale(0.5)).collect();
        let spray: Vec<f64> = spray_jets.iter().map(|j| j.value()).collect();

        let mut nonlinear_jets: Vec<Vec<Jet>> = Vec::with_capacity(n);
        for sj in &spray_jets {
            let row: Vec<Jet> = (0..n).map(|j| sj.derive(n + j)).collect::<Result<_>>()?;
            nonlinear_jets.push(row);
        }
        let nonlinear: Vec<Vec<f64>> = nonlinear_jets
            .iter()
            .map(|row| row.iter().map(|j| j.value()).collect())
            .collect();

        let mut berwald = vec![vec![vec![0.0; n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    berwald[i][j][k] = spray_jets[i].partial(&unit_index2(nv, n + j, n + k))?;
                }
            }
        }

        // R^i_jk = delta_j N^i_k - delta_k N^i_j with
        // delta_j = d/dx^j - N^l_j d/dy^l.
        let mut curvature = vec![vec![vec![0.0; n]; n]; n];
        for i in 0..n {
            let delta = |j: usize, k: usize| -> Result<f64> {
                let mut v = nonlinear_jets[i][k].partial(&unit_index(nv, j))?;
                for l in 0..n {
                    v -= nonlinear[l][j] * nonlinear_jets[i][k].partial(&unit_index(nv, n + l))?;
                }
                Ok(v)
            };
            for j in 0..n {
                for k in 0..n {
                    curvature[i][j][k] = delta(j, k)? - delta(k, j)?;
                }
            }
        }

        Ok(GeomEval {
            dim: n,
            order,
            point: point.clone(),
            energy,
            f_jet,
            f2,
            f,
            g_jets,
            ell_jets,
            spray_jets,
            nonlinear_jets,
            g,
            g_inv,
            ell,
            hbar,
            cartan,
            spray,
            nonlinear,
            berwald,
            curvature,
        })
    }

    /// Horizontal (Berwald) derivative of a scalar jet: delta_j applied to
    /// `jet`, which must live in this chart's variable layout at order >= 1.
    pub fn delta_scalar(&self, jet: &Jet, j: usize) -> Result<f64> {
        let nv = 2 * self.dim;
        let mut v = jet.partial(&unit_index(nv, j))?;
        for l in 0..self.dim {
            v -= self.nonlinear[l][j] * jet.partial(&unit_index(nv, self.dim + l))?;
        }
        Ok(v)
    }

    /// Berwald horizontal covariant derivative of a vector field given by
    /// component jets (order >= 1): V^i_|j = delta_j V^i + V^k G^i_kj.
    pub fn hcov_field(&self, comps: &[Jet]) -> Result<Vec<Vec<f64>>> {
        let n = self.dim;
        let mut out = vec![vec![0.0; n]; n];
        let values: Vec<f64> = comps.iter().map(|c| c.value()).collect();
        for i in 0..n {
            for j in 0..n {
                let mut v = self.delta_scalar(&comps[i], j)?;
                for k in 0..n {
                    v += values[k] * self.berwald[i][k][j];
                }
                out[i][j] = v;
            }
        }
        Ok(out)
    }

    /// Plain vertical derivative of a vector field: d V^i / d y^j.
    pub fn vderiv_field(&self, comps: &[Jet]) -> Result<Vec<Vec<f64>>> {
        let n = self.dim;
        let nv = 2 * n;
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                out[i][j] = comps[i].partial(&unit_index(nv, n + j))?;
            }
        }
        Ok(out)
    }
}
