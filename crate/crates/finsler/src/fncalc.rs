//! Calculus of vector fields and vector-valued 1-forms on the slit tangent
//! bundle, in induced coordinates.
//!
//! Fields and form entries are jets over the 2n chart variables, so Lie
//! brackets are exact: each bracket consumes one order of the jets. The
//! bracket of two vector 1-forms K, L evaluated on fields (X, Y) is
//!
//! ```text
//! [K,L](X,Y) = [KX,LY] + [LX,KY] + KL[X,Y] + LK[X,Y]
//!            - K([LX,Y] + [X,LY]) - L([KX,Y] + [X,KY])
//! ```
//!
//! and the torsion of a single form is N_L = [L,L]/2. The canonical objects
//! (tangent structure J, Liouville field, horizontal/vertical projectors,
//! spray field, and the deformation form of a metric change) are provided as
//! builders over a [`Frame`].

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{field_component_jets, ChartPoint, FinslerModel, GeomEval};
use crate::jet::{Jet, JetSpace};
use crate::kropina::ChangeContext;

/// A jet space anchored at one point, with seeds for all 2n variables.
pub struct Frame {
    pub dim: usize,
    pub order: usize,
    pub space: Arc<JetSpace>,
    /// Seeds for x variables then y variables.
    pub seeds: Vec<Jet>,
}

impl Frame {
    pub fn new(dim: usize, point: &ChartPoint, order: usize) -> Frame {
        let space = JetSpace::get(2 * dim, order);
        let mut seeds = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            seeds.push(Jet::variable(&space, i, point.x[i]).unwrap());
        }
        for i in 0..dim {
            seeds.push(Jet::variable(&space, dim + i, point.y[i]).unwrap());
        }
        Frame {
            dim,
            order,
            space,
            seeds,
        }
    }

    pub fn zero(&self) -> Jet {
        Jet::constant(&self.space, 0.0)
    }

    pub fn one(&self) -> Jet {
        Jet::constant(&self.space, 1.0)
    }
}

/// A vector field on the bundle: 2n component jets.
#[derive(Clone)]
pub struct FieldJets {
    pub comps: Vec<Jet>,
}

impl FieldJets {
    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.value()).collect()
    }

    fn min_order(&self) -> usize {
        self.comps.iter().map(|c| c.order()).min().unwrap()
    }
}

/// A vector-valued 1-form: entries[a][b] acts on component b producing
/// component a.
#[derive(Clone)]
pub struct FormJets {
    pub entries: Vec<Vec<Jet>>,
}

fn mul_trunc(a: &Jet, b: &Jet) -> Jet {
    let r = a.order().min(b.order());
    a.truncate(r).mul(&b.truncate(r))
}

fn add_into(acc: &mut Option<Jet>, term: Jet) {
    *acc = Some(match acc.take() {
        None => term,
        Some(prev) => {
            let r = prev.order().min(term.order());
            &prev.truncate(r) + &term.truncate(r)
        }
    });
}

/// Apply a form to a field.
pub fn apply(form: &FormJets, field: &FieldJets) -> FieldJets {
    let dim2 = field.comps.len();
    let mut comps = Vec::with_capacity(dim2);
    for a in 0..dim2 {
        let mut acc: Option<Jet> = None;
        for b in 0..dim2 {
            let entry = &form.entries[a][b];
            if entry.maxnorm() == 0.0 {
                continue;
            }
            add_into(&mut acc, mul_trunc(entry, &field.comps[b]));
        }
        let r = field
            .min_order()
            .min(form.entries[a].iter().map(|e| e.order()).min().unwrap());
        comps.push(
            acc.map(|j| j.truncate(r))
                .unwrap_or_else(|| Jet::constant(&JetSpace::get(field.comps[0].n_vars(), r), 0.0)),
        );
    }
    FieldJets { comps }
}

/// Compose two forms: (K L)(W) = K(L(W)).
pub fn compose(k: &FormJets, l: &FormJets) -> FormJets {
    let dim2 = k.entries.len();
    let order = form_order(k).min(form_order(l));
    let n_vars = k.entries[0][0].n_vars();
    let zero = Jet::constant(&JetSpace::get(n_vars, order), 0.0);
    let mut entries = vec![vec![zero; dim2]; dim2];
    for a in 0..dim2 {
        for b in 0..dim2 {
            let mut acc: Option<Jet> = None;
            for c in 0..dim2 {
                if k.entries[a][c].maxnorm() == 0.0 || l.entries[c][b].maxnorm() == 0.0 {
                    continue;
                }
                add_into(&mut acc, mul_trunc(&k.entries[a][c], &l.entries[c][b]));
            }
            if let Some(j) = acc {
                entries[a][b] = j.truncate(order);
            }
        }
    }
    FormJets { entries }
}

fn form_order(f: &FormJets) -> usize {
    f.entries
        .iter()
        .flat_map(|row| row.iter())
        .map(|e| e.order())
        .min()
        .unwrap()
}

/// Entry-wise linear combination of forms at their common order.
pub fn form_axpy(a: f64, k: &FormJets, b: f64, l: &FormJets) -> FormJets {
    let order = form_order(k).min(form_order(l));
    let entries = k
        .entries
        .iter()
        .zip(&l.entries)
        .map(|(rk, rl)| {
            rk.iter()
                .zip(rl)
                .map(|(ek, el)| &ek.truncate(order).scale(a) + &el.truncate(order).scale(b))
                .collect()
        })
        .collect();
    FormJets { entries }
}

/// Lie bracket of two fields; the result sits one order lower.
pub fn lie_bracket(w: &FieldJets, z: &FieldJets) -> Result<FieldJets> {
    let dim2 = w.comps.len();
    let r = w.min_order().min(z.min_order());
    if r == 0 {
        return Err(Error::IndexOutOfRange {
            what: "Lie bracket of order-0 fields".into(),
        });
    }
    let mut comps = Vec::with_capacity(dim2);
    for a in 0..dim2 {
        let mut acc: Option<Jet> = None;
        for b in 0..dim2 {
            let wb = &w.comps[b];
            if wb.maxnorm() != 0.0 {
                let dz = z.comps[a].truncate(r).derive(b)?;
                add_into(&mut acc, mul_trunc(wb, &dz));
            }
            let zb = &z.comps[b];
            if zb.maxnorm() != 0.0 {
                let dw = w.comps[a].truncate(r).derive(b)?;
                add_into(&mut acc, mul_trunc(zb, &dw).neg());
            }
        }
        comps.push(
            acc.unwrap_or_else(|| Jet::constant(&JetSpace::get(w.comps[0].n_vars(), r - 1), 0.0)),
        );
    }
    Ok(FieldJets { comps })
}

/// The bracket of two vector 1-forms, evaluated on a pair of fields;
/// returns component values.
pub fn fn_bracket(k: &FormJets, l: &FormJets, w: &FieldJets, z: &FieldJets) -> Result<Vec<f64>> {
    let kw = apply(k, w);
    let kz = apply(k, z);
    let lw = apply(l, w);
    let lz = apply(l, z);
    let wz = lie_bracket(w, z)?;

    let t1 = lie_bracket(&kw, &lz)?;
    let t2 = lie_bracket(&lw, &kz)?;
    let t3 = apply(k, &apply(l, &wz));
    let t4 = apply(l, &apply(k, &wz));
    let t5 = apply(k, &lie_bracket(&lw, z)?);
    let t6 = apply(k, &lie_bracket(w, &lz)?);
    let t7 = apply(l, &lie_bracket(&kw, z)?);
    let t8 = apply(l, &lie_bracket(w, &kz)?);

    let dim2 = w.comps.len();
    let mut out = vec![0.0; dim2];
    for a in 0..dim2 {
        out[a] =
            t1.comps[a].value() + t2.comps[a].value() + t3.comps[a].value() + t4.comps[a].value()
                - t5.comps[a].value()
                - t6.comps[a].value()
                - t7.comps[a].value()
                - t8.comps[a].value();
    }
    Ok(out)
}

/// Torsion of a single form on a pair of fields: N_L(W, Z) = [L, L](W, Z)/2.
pub fn nijenhuis(l: &FormJets, w: &FieldJets, z: &FieldJets) -> Result<Vec<f64>> {
    let full = fn_bracket(l, l, w, z)?;
    Ok(full.into_iter().map(|v| 0.5 * v).collect())
}

/// Coordinate basis field along the base directions.
pub fn basis_x(frame: &Frame, j: usize) -> FieldJets {
    let mut comps = vec![frame.zero(); 2 * frame.dim];
    comps[j] = frame.one();
    FieldJets { comps }
}

/// Coordinate basis field along the fiber directions.
pub fn basis_y(frame: &Frame, j: usize) -> FieldJets {
    let mut comps = vec![frame.zero(); 2 * frame.dim];
    comps[frame.dim + j] = frame.one();
    FieldJets { comps }
}

/// The identity form.
pub fn identity_form(frame: &Frame) -> FormJets {
    let d2 = 2 * frame.dim;
    let mut entries = vec![vec![frame.zero(); d2]; d2];
    for (a, row) in entries.iter_mut().enumerate() {
        row[a] = frame.one();
    }
    FormJets { entries }
}

/// The tangent structure J: sends horizontal basis fields to their vertical
/// partners, kills vertical ones.
pub fn tangent_structure(frame: &Frame) -> FormJets {
    let n = frame.dim;
    let mut entries = vec![vec![frame.zero(); 2 * n]; 2 * n];
    for i in 0..n {
        entries[n + i][i] = frame.one();
    }
    FormJets { entries }
}

/// The Liouville field (0, y).
pub fn liouville_field(frame: &Frame) -> FieldJets {
    let n = frame.dim;
    let mut comps = vec![frame.zero(); 2 * n];
    for i in 0..n {
        comps[n + i] = frame.seeds[n + i].clone();
    }
    FieldJets { comps }
}

/// Horizontal projector of a nonlinear connection: rows (I, 0; -N, 0).
pub fn horizontal_projector(frame: &Frame, nonlinear_jets: &[Vec<Jet>]) -> FormJets {
    let n = frame.dim;
    let mut entries = vec![vec![frame.zero(); 2 * n]; 2 * n];
    for i in 0..n {
        entries[i][i] = frame.one();
        for j in 0..n {
            entries[n + i][j] = nonlinear_jets[i][j].truncate(frame.order).neg();
        }
    }
    FormJets { entries }
}

/// Vertical projector: rows (0, 0; N, I).
pub fn vertical_projector(frame: &Frame, nonlinear_jets: &[Vec<Jet>]) -> FormJets {
    let n = frame.dim;
    let mut entries = vec![vec![frame.zero(); 2 * n]; 2 * n];
    for i in 0..n {
        entries[n + i][n + i] = frame.one();
        for j in 0..n {
            entries[n + i][j] = nonlinear_jets[i][j].truncate(frame.order);
        }
    }
    FormJets { entries }
}

/// The almost product structure 2h - I of a connection.
pub fn almost_product(frame: &Frame, nonlinear_jets: &[Vec<Jet>]) -> FormJets {
    form_axpy(
        2.0,
        &horizontal_projector(frame, nonlinear_jets),
        -1.0,
        &identity_form(frame),
    )
}

/// The geodesic spray field (y, -2G).
pub fn spray_field(frame: &Frame, spray_jets: &[Jet]) -> FieldJets {
    let n = frame.dim;
    let mut comps = Vec::with_capacity(2 * n);
    for i in 0..n {
        comps.push(frame.seeds[n + i].clone());
    }
    for sj in spray_jets.iter().take(n) {
        comps.push(sj.truncate(frame.order).scale(-2.0));
    }
    FieldJets { comps }
}

/// The deformation form of the metric change: the difference of the changed
/// and original almost product structures. It kills vertical fields and sends
/// d/dx^j to the vertical field with components
/// -(Psi1 delta^i_j + dPsi1/dy^j y^i - sigma dPsi2/dy^j phi^i).
pub fn deformation_form(
    frame: &Frame,
    ctx: &ChangeContext,
    phi_comps: &[Jet],
    sigma: f64,
) -> FormJets {
    let n = frame.dim;
    let r = frame.order;
    let mut entries = vec![vec![frame.zero(); 2 * n]; 2 * n];
    let psi1 = ctx.psi1_jet.truncate(r);
    for j in 0..n {
        let dpsi1 = ctx.psi1_jet.derive(n + j).unwrap().truncate(r);
        let dpsi2 = ctx.psi2_jet.derive(n + j).unwrap().truncate(r);
        for i in 0..n {
            let mut entry = dpsi1.mul(&frame.seeds[n + i].truncate(r));
            if i == j {
                entry = &entry + &psi1;
            }
            entry = &entry - &dpsi2.mul(&phi_comps[i].truncate(r)).scale(sigma);
            entries[n + i][j] = entry.neg();
        }
    }
    FormJets { entries }
}

/// A small random polynomial field: per component a constant, a few linear
/// terms, and a quadratic term, coefficients uniform in [-1, 1].
pub fn random_polynomial_field(frame: &Frame, rng: &mut impl Rng) -> FieldJets {
    let d2 = 2 * frame.dim;
    let comps = (0..d2)
        .map(|_| {
            let mut j = Jet::constant(&frame.space, rng.gen_range(-1.0..1.0));
            for _ in 0..3 {
                let v = rng.gen_range(0..d2);
                let c: f64 = rng.gen_range(-1.0..1.0);
                j = &j + &frame.seeds[v].scale(c);
            }
            let a = rng.gen_range(0..d2);
            let b = rng.gen_range(0..d2);
            let c: f64 = rng.gen_range(-1.0..1.0);
            j = &j + &frame.seeds[a].mul(&frame.seeds[b]).scale(c);
            j
        })
        .collect();
    FieldJets { comps }
}

/// Predicted curvature of the changed connection: the original curvature plus
/// the vertical part of -[h, FF]/2 - N_FF/4 on horizontal basis pairs.
pub fn changed_curvature_prediction(
    geom: &GeomEval,
    ctx: &ChangeContext,
    model: &FinslerModel,
    sigma: f64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = geom.dim;
    let frame = Frame::new(n, &geom.point, 1);
    let h = horizontal_projector(&frame, &geom.nonlinear_jets);
    let phi_comps = field_component_jets(model, &geom.point, &frame.space)?;
    let ff = deformation_form(&frame, ctx, &phi_comps, sigma);

    let mut out = vec![vec![vec![0.0; n]; n]; n];
    for j in 0..n {
        for k in (j + 1)..n {
            let bx_j = basis_x(&frame, j);
            let bx_k = basis_x(&frame, k);
            let t_hf = fn_bracket(&h, &ff, &bx_j, &bx_k)?;
            let t_ff = fn_bracket(&ff, &ff, &bx_j, &bx_k)?;
            for i in 0..n {
                let correction = -0.5 * t_hf[n + i] - 0.125 * t_ff[n + i];
                out[i][j][k] = geom.curvature[i][j][k] + correction;
                out[i][k][j] = -out[i][j][k];
            }
        }
    }
    Ok(out)
}

/// Exercise the structural identities of the canonical objects at one
/// evaluated point and return the largest residual: projector algebra,
/// tangent structure laws, spray pairings, torsion-freeness of J on random
/// polynomial fields, and the bracket expansion of the connection curvature.
pub fn structure_selftest(geom: &GeomEval, rng: &mut impl Rng) -> Result<f64> {
    let n = geom.dim;
    let mut worst: f64 = 0.0;
    let mut track = |v: f64| {
        if v.abs() > worst {
            worst = v.abs();
        }
    };

    // Projector algebra at order 1.
    let frame = Frame::new(n, &geom.point, 1);
    let h = horizontal_projector(&frame, &geom.nonlinear_jets);
    let v = vertical_projector(&frame, &geom.nonlinear_jets);
    let gam = almost_product(&frame, &geom.nonlinear_jets);
    let j_form = tangent_structure(&frame);
    let ident = identity_form(&frame);

    let diff_forms = |a: &FormJets, b: &FormJets, track: &mut dyn FnMut(f64)| {
        let order = form_order(a).min(form_order(b));
        for (ra, rb) in a.entries.iter().zip(&b.entries) {
            for (ea, eb) in ra.iter().zip(rb) {
                let d = &ea.truncate(order) - &eb.truncate(order);
                track(d.maxnorm());
            }
        }
    };

    diff_forms(&compose(&h, &h), &h, &mut track);
    diff_forms(&compose(&v, &v), &v, &mut track);
    diff_forms(&form_axpy(1.0, &h, 1.0, &v), &ident, &mut track);
    let zero_form = form_axpy(0.0, &ident, 0.0, &ident);
    diff_forms(&compose(&h, &v), &zero_form, &mut track);
    diff_forms(&compose(&v, &h), &zero_form, &mut track);
    diff_forms(&compose(&j_form, &j_form), &zero_form, &mut track);
    diff_forms(&compose(&j_form, &gam), &j_form, &mut track);
    diff_forms(
        &compose(&gam, &j_form),
        &form_axpy(-1.0, &j_form, 0.0, &ident),
        &mut track,
    );

    // Spray pairings: J S = Liouville, [Liouville, S] = S.
    let s_field = spray_field(&frame, &geom.spray_jets);
    let c_field = liouville_field(&frame);
    let js = apply(&j_form, &s_field);
    for (a, b) in js.comps.iter().zip(&c_field.comps) {
        track(a.value() - b.value());
    }
    let jc = apply(&j_form, &c_field);
    for comp in &jc.comps {
        track(comp.value());
    }
    let cs = lie_bracket(&c_field, &s_field)?;
    for (a, b) in cs.comps.iter().zip(&s_field.comps) {
        track(a.value() - b.value());
    }

    // Connection curvature from the bracket of the horizontal projector:
    // -N_h(dx_j, dx_k) has vertical components R^i_jk and no horizontal part.
    for j in 0..n {
        for k in (j + 1)..n {
            let nh = nijenhuis(&h, &basis_x(&frame, j), &basis_x(&frame, k))?;
            for i in 0..n {
                track(-nh[n + i] - geom.curvature[i][j][k]);
                track(nh[i]);
            }
        }
    }

    // Torsion-freeness of J and its bracket consequence on random fields.
    let frame2 = Frame::new(n, &geom.point, 2);
    let j2 = tangent_structure(&frame2);
    for _ in 0..3 {
        let w = random_polynomial_field(&frame2, rng);
        let z = random_polynomial_field(&frame2, rng);
        for r in nijenhuis(&j2, &w, &z)? {
            track(r);
        }
        // [JW, JZ] = J [W, JZ] + J [JW, Z]
        let jw = apply(&j2, &w);
        let jz = apply(&j2, &z);
        let lhs = lie_bracket(&jw, &jz)?;
        let rhs1 = apply(&j2, &lie_bracket(&w, &jz)?);
        let rhs2 = apply(&j2, &lie_bracket(&jw, &z)?);
        for a in 0..2 * n {
            track(lhs.comps[a].value() - rhs1.comps[a].value() - rhs2.comps[a].value());
        }
    }

    Ok(worst)
}
