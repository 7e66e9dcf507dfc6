//! Truncated multivariate Taylor arithmetic ("jets").
//!
//! A jet holds the Taylor coefficients of a smooth function at a point, over
//! `n_vars` variables up to a fixed total `order`. Every arithmetic operation
//! propagates all coefficients exactly, so extracted partial derivatives carry
//! no step-size error; the only approximation is the order cap itself.
//!
//! Coefficients are stored densely in graded lexicographic layout: total
//! degree ascending, and within one degree the exponent tuples in descending
//! lexicographic order (e.g. for two variables at degree 2: (2,0), (1,1),
//! (0,2)). Layout tables are computed once per `(n_vars, order)` pair and
//! shared through an `Arc`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Sentinel in the product table for "exceeds the order cap".
const NO_RANK: u32 = u32::MAX;

/// Relative threshold below which a leading coefficient counts as zero.
const SINGULAR_TOL: f64 = 1e-12;

/// Shared layout tables for one `(n_vars, order)` coefficient space.
pub struct JetSpace {
    n_vars: usize,
    order: usize,
    /// Exponent tuple per rank, graded-lex.
    monomials: Vec<Vec<u8>>,
    /// Total degree per rank.
    degree: Vec<u16>,
    /// `degree_start[d]..degree_start[d + 1]` are the ranks of total degree d.
    degree_start: Vec<usize>,
    /// Flattened `len * len` rank-of-product table, `NO_RANK` past the cap.
    product: Vec<u32>,
    /// Multi-index factorial per rank, as f64.
    factorial: Vec<f64>,
    /// Exponent tuple -> rank.
    rank_of: HashMap<Vec<u8>, usize>,
}

fn monomials_graded_lex(n_vars: usize, order: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut current = vec![0u8; n_vars];
    for d in 0..=order {
        emit_degree(&mut out, &mut current, 0, d as u8);
    }
    out
}

/// Distribute `remaining` over positions `pos..`, first position taking the
/// largest share first, which yields descending lex order within a degree.
fn emit_degree(out: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, pos: usize, remaining: u8) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    let mut e = remaining;
    loop {
        current[pos] = e;
        emit_degree(out, current, pos + 1, remaining - e);
        if e == 0 {
            break;
        }
        e -= 1;
    }
    current[pos] = 0;
}

impl JetSpace {
    fn build(n_vars: usize, order: usize) -> JetSpace {
        assert!(n_vars >= 1, "jet space needs at least one variable");
        let monomials = monomials_graded_lex(n_vars, order);
        let len = monomials.len();

        let degree: Vec<u16> = monomials
            .iter()
            .map(|m| m.iter().map(|&e| e as u16).sum())
            .collect();

        // degree_start[d] = first rank of total degree >= d (ranks are degree-sorted)
        let mut degree_start = vec![0usize; order + 2];
        for d in 0..=order + 1 {
            degree_start[d] = degree.iter().position(|&x| x as usize >= d).unwrap_or(len);
        }

        let mut rank_of = HashMap::with_capacity(len * 2);
        for (r, m) in monomials.iter().enumerate() {
            rank_of.insert(m.clone(), r);
        }

        let mut product = vec![NO_RANK; len * len];
        let mut sum = vec![0u8; n_vars];
        for i in 0..len {
            for j in 0..len {
                if degree[i] as usize + degree[j] as usize > order {
                    continue;
                }
                for v in 0..n_vars {
                    sum[v] = monomials[i][v] + monomials[j][v];
                }
                product[i * len + j] = rank_of[&sum[..].to_vec()] as u32;
            }
        }

        let factorial: Vec<f64> = monomials
            .iter()
            .map(|m| {
                m.iter()
                    .map(|&e| (1..=e as u64).map(|k| k as f64).product::<f64>())
                    .product()
            })
            .collect();

        JetSpace {
            n_vars,
            order,
            monomials,
            degree,
            degree_start,
            product,
            factorial,
            rank_of,
        }
    }

    /// Fetch (building and caching on first use) the shared space for
    /// `(n_vars, order)`.
    pub fn get(n_vars: usize, order: usize) -> Arc<JetSpace> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry((n_vars, order))
            .or_insert_with(|| Arc::new(JetSpace::build(n_vars, order)))
            .clone()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Rank of an exponent tuple, if it is within the cap.
    pub fn rank(&self, exponents: &[usize]) -> Option<usize> {
        if exponents.len() != self.n_vars {
            return None;
        }
        if exponents.iter().sum::<usize>() > self.order {
            return None;
        }
        let key: Vec<u8> = exponents.iter().map(|&e| e as u8).collect();
        self.rank_of.get(&key).copied()
    }

    pub fn monomial(&self, rank: usize) -> &[u8] {
        &self.monomials[rank]
    }
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "JetSpace(n_vars={}, order={}, len={})",
            self.n_vars,
            self.order,
            self.len()
        )
    }
}

/// A truncated Taylor expansion: coefficient vector over a shared layout.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, value: f64) -> Jet {
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = value;
        Jet {
            space: space.clone(),
            coeffs,
        }
    }

    /// The jet of the coordinate function `var` evaluated at `value`:
    /// constant term `value`, first-order coefficient 1 in slot `var`.
    pub fn variable(space: &Arc<JetSpace>, var: usize, value: f64) -> Result<Jet> {
        if var >= space.n_vars {
            return Err(Error::IndexOutOfRange {
                what: format!("variable {var} in a {}-variable space", space.n_vars),
            });
        }
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = value;
        if space.order >= 1 {
            let mut e = vec![0usize; space.n_vars];
            e[var] = 1;
            coeffs[space.rank(&e).unwrap()] = 1.0;
        }
        Ok(Jet {
            space: space.clone(),
            coeffs,
        })
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn n_vars(&self) -> usize {
        self.space.n_vars
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Constant term: the value of the represented function at the base point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Largest coefficient magnitude.
    pub fn maxnorm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| a.max(c.abs()))
    }

    fn assert_same_space(&self, other: &Jet) {
        assert!(
            Arc::ptr_eq(&self.space, &other.space)
                || (self.space.n_vars == other.space.n_vars
                    && self.space.order == other.space.order),
            "jet space mismatch: {:?} vs {:?}",
            self.space,
            other.space
        );
    }

    /// Partial derivative value for a multi-index of exponents
    /// (coefficient times multi-index factorial).
    pub fn partial(&self, exponents: &[usize]) -> Result<f64> {
        if exponents.len() != self.space.n_vars {
            return Err(Error::IndexOutOfRange {
                what: format!(
                    "multi-index of length {} in a {}-variable space",
                    exponents.len(),
                    self.space.n_vars
                ),
            });
        }
        match self.space.rank(exponents) {
            Some(r) => Ok(self.coeffs[r] * self.space.factorial[r]),
            None => Err(Error::IndexOutOfRange {
                what: format!(
                    "multi-index {exponents:?} of total degree {} in an order-{} jet",
                    exponents.iter().sum::<usize>(),
                    self.space.order
                ),
            }),
        }
    }

    /// First partial with respect to one variable, as a jet one order lower.
    pub fn derive(&self, var: usize) -> Result<Jet> {
        if var >= self.space.n_vars {
            return Err(Error::IndexOutOfRange {
                what: format!("variable {var} in a {}-variable space", self.space.n_vars),
            });
        }
        if self.space.order == 0 {
            return Err(Error::IndexOutOfRange {
                what: "derivative of an order-0 jet".to_string(),
            });
        }
        let target = JetSpace::get(self.space.n_vars, self.space.order - 1);
        let mut coeffs = vec![0.0; target.len()];
        let mut bumped = vec![0usize; self.space.n_vars];
        for (r, c) in coeffs.iter_mut().enumerate() {
            let mono = target.monomial(r);
            for (v, b) in bumped.iter_mut().enumerate() {
                *b = mono[v] as usize;
            }
            bumped[var] += 1;
            let src = self.space.rank(&bumped).expect("bumped index in range");
            *c = self.coeffs[src] * bumped[var] as f64;
        }
        Ok(Jet {
            space: target,
            coeffs,
        })
    }

    /// Copy of this jet truncated to a lower (or equal) order.
    pub fn truncate(&self, new_order: usize) -> Jet {
        if new_order >= self.space.order {
            return self.clone();
        }
        let target = JetSpace::get(self.space.n_vars, new_order);
        let coeffs = self.coeffs[..target.len()].to_vec();
        Jet {
            space: target,
            coeffs,
        }
    }

    pub fn add(&self, other: &Jet) -> Jet {
        self.assert_same_space(other);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.assert_same_space(other);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }

    pub fn neg(&self) -> Jet {
        Jet {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        self.assert_same_space(other);
        let space = &self.space;
        let len = space.len();
        let order = space.order;
        let mut coeffs = vec![0.0; len];
        for i in 0..len {
            let ai = self.coeffs[i];
            if ai == 0.0 {
                continue;
            }
            let di = space.degree[i] as usize;
            let j_end = space.degree_start[order - di + 1];
            let row = &space.product[i * len..i * len + j_end];
            for (j, &r) in row.iter().enumerate() {
                let bj = other.coeffs[j];
                if bj != 0.0 {
                    coeffs[r as usize] += ai * bj;
                }
            }
        }
        Jet {
            space: space.clone(),
            coeffs,
        }
    }

    /// Quotient by graded recurrence: needs a nonzero constant term in the
    /// denominator, nothing more.
    pub fn div(&self, other: &Jet) -> Result<Jet> {
        self.assert_same_space(other);
        let b0 = other.coeffs[0];
        if b0.abs() <= SINGULAR_TOL * other.maxnorm().max(1.0) {
            return Err(Error::DivisionBySingularJet { expr: None });
        }
        let space = &self.space;
        let len = space.len();
        let order = space.order;
        let mut out = vec![0.0; len];
        let mut acc = vec![0.0; len];
        for j in 0..len {
            let cj = (self.coeffs[j] - acc[j]) / b0;
            out[j] = cj;
            if cj == 0.0 {
                continue;
            }
            let dj = space.degree[j] as usize;
            if dj == order {
                continue;
            }
            // forward-accumulate b_i * c_j into every still-unvisited rank
            let i_start = space.degree_start[1];
            let i_end = space.degree_start[order - dj + 1];
            for i in i_start..i_end {
                let bi = other.coeffs[i];
                if bi == 0.0 {
                    continue;
                }
                let r = space.product[i * len + j];
                debug_assert_ne!(r, NO_RANK);
                acc[r as usize] += bi * cj;
            }
        }
        Ok(Jet {
            space: space.clone(),
            coeffs: out,
        })
    }

    /// Compose a univariate power series around this jet's constant term:
    /// given `s[k] = f^(k)(u0) / k!`, returns the jet of `f(self)`.
    fn compose_series(&self, s: &[f64]) -> Jet {
        let space = &self.space;
        debug_assert_eq!(s.len(), space.order + 1);
        let mut w = self.clone();
        w.coeffs[0] = 0.0;
        let mut out = Jet::constant(space, s[space.order]);
        for k in (0..space.order).rev() {
            out = out.mul(&w);
            out.coeffs[0] += s[k];
        }
        out
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let u0 = self.coeffs[0];
        if u0 <= SINGULAR_TOL * self.maxnorm().max(1.0) {
            return Err(Error::Domain {
                what: format!("square root of a quantity with value term {u0:.6e}"),
                expr: None,
            });
        }
        let order = self.space.order;
        let mut s = vec![0.0; order + 1];
        s[0] = u0.sqrt();
        for k in 1..=order {
            s[k] = s[k - 1] * (0.5 - (k as f64 - 1.0)) / (k as f64 * u0);
        }
        Ok(self.compose_series(&s))
    }

    /// Real power. Integer exponents use exact binary exponentiation (valid
    /// for any base with, for negative exponents, a nonzero value term);
    /// fractional exponents expand a binomial series and need a positive
    /// value term.
    pub fn pow_real(&self, p: f64) -> Result<Jet> {
        let rounded = p.round();
        if (p - rounded).abs() < 1e-9 && rounded.abs() < 1e15 {
            let n = rounded as i64;
            if n >= 0 {
                return Ok(pow_by_squaring(
                    Jet::constant(&self.space, 1.0),
                    self.clone(),
                    n as u64,
                    |a, b| a.mul(b),
                ));
            }
            let positive = pow_by_squaring(
                Jet::constant(&self.space, 1.0),
                self.clone(),
                (-n) as u64,
                |a, b| a.mul(b),
            );
            return Jet::constant(&self.space, 1.0).div(&positive);
        }
        let u0 = self.coeffs[0];
        if u0 <= SINGULAR_TOL * self.maxnorm().max(1.0) {
            return Err(Error::Domain {
                what: format!("power {p} of a quantity with value term {u0:.6e}"),
                expr: None,
            });
        }
        let order = self.space.order;
        let mut s = vec![0.0; order + 1];
        s[0] = u0.powf(p);
        for k in 1..=order {
            s[k] = s[k - 1] * ((p - (k as f64 - 1.0)) / k as f64) / u0;
        }
        Ok(self.compose_series(&s))
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nnz = self.coeffs.iter().filter(|c| **c != 0.0).count();
        write!(
            f,
            "Jet(value={}, n_vars={}, order={}, nnz={})",
            self.coeffs[0], self.space.n_vars, self.space.order, nnz
        )
    }
}

impl std::ops::Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet::add(self, rhs)
    }
}

impl std::ops::Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet::sub(self, rhs)
    }
}

impl std::ops::Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        Jet::mul(self, rhs)
    }
}

impl std::ops::Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::neg(self)
    }
}

impl std::ops::Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

/// Shared exponentiation loop so that scalar and jet integer powers perform
/// the exact same multiplication sequence (and therefore agree bit for bit on
/// the value term).
fn pow_by_squaring<T: Clone>(one: T, base: T, mut n: u64, mul: impl Fn(&T, &T) -> T) -> T {
    let mut result = one;
    let mut base = base;
    loop {
        if n & 1 == 1 {
            result = mul(&result, &base);
        }
        n >>= 1;
        if n == 0 {
            return result;
        }
        base = mul(&base, &base);
    }
}

/// Number-like values the expression evaluator can run over: plain floats for
/// point evaluation and jets for differentiation. Implementations must agree
/// on the value term, operation for operation.
pub trait Scalar: Clone {
    fn constant_like(&self, v: f64) -> Self;
    fn value(&self) -> f64;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, rhs: &Self) -> Result<Self>;
    fn sqrt(&self) -> Result<Self>;
    fn pow_real(&self, p: f64) -> Result<Self>;
}

impl Scalar for f64 {
    fn constant_like(&self, v: f64) -> f64 {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, rhs: &f64) -> f64 {
        self + rhs
    }
    fn sub(&self, rhs: &f64) -> f64 {
        self - rhs
    }
    fn mul(&self, rhs: &f64) -> f64 {
        self * rhs
    }
    fn neg(&self) -> f64 {
        -self
    }
    fn div(&self, rhs: &f64) -> Result<f64> {
        if rhs.abs() <= SINGULAR_TOL * rhs.abs().max(1.0) {
            return Err(Error::DivisionBySingularJet { expr: None });
        }
        Ok(self / rhs)
    }
    fn sqrt(&self) -> Result<f64> {
        if *self <= SINGULAR_TOL * self.abs().max(1.0) {
            return Err(Error::Domain {
                what: format!("square root of a quantity with value term {self:.6e}"),
                expr: None,
            });
        }
        Ok(f64::sqrt(*self))
    }
    fn pow_real(&self, p: f64) -> Result<f64> {
        let rounded = p.round();
        if (p - rounded).abs() < 1e-9 && rounded.abs() < 1e15 {
            let n = rounded as i64;
            if n >= 0 {
                return Ok(pow_by_squaring(1.0, *self, n as u64, |a, b| a * b));
            }
            let positive = pow_by_squaring(1.0, *self, (-n) as u64, |a, b| a * b);
            if positive.abs() <= SINGULAR_TOL {
                return Err(Error::DivisionBySingularJet { expr: None });
            }
            return Ok(1.0 / positive);
        }
        if *self <= SINGULAR_TOL * self.abs().max(1.0) {
            return Err(Error::Domain {
                what: format!("power {p} of a quantity with value term {self:.6e}"),
                expr: None,
            });
        }
        Ok(self.powf(p))
    }
}

impl Scalar for Jet {
    fn constant_like(&self, v: f64) -> Jet {
        Jet::constant(&self.space, v)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn add(&self, rhs: &Jet) -> Jet {
        Jet::add(self, rhs)
    }
    fn sub(&self, rhs: &Jet) -> Jet {
        Jet::sub(self, rhs)
    }
    fn mul(&self, rhs: &Jet) -> Jet {
        Jet::mul(self, rhs)
    }
    fn neg(&self) -> Jet {
        Jet::neg(self)
    }
    fn div(&self, rhs: &Jet) -> Result<Jet> {
        Jet::div(self, rhs)
    }
    fn sqrt(&self) -> Result<Jet> {
        Jet::sqrt(self)
    }
    fn pow_real(&self, p: f64) -> Result<Jet> {
        Jet::pow_real(self, p)
    }
}

/// Solve `A X = B` over the jet ring by Gaussian elimination, pivoting on the
/// magnitude of constant terms. `a` is square (rows of equal length), `b` has
/// the same number of rows; the result has `b`'s shape.
pub fn solve_linear(a: &[Vec<Jet>], b: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    let n = a.len();
    assert!(n > 0 && a.iter().all(|row| row.len() == n));
    assert_eq!(b.len(), n);
    let k = b[0].len();
    assert!(b.iter().all(|row| row.len() == k));

    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |s, j| s.max(j.value().abs()))
        .max(1.0);

    let mut m: Vec<Vec<Jet>> = a.to_vec();
    let mut rhs: Vec<Vec<Jet>> = b.to_vec();

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                m[r1][col]
                    .value()
                    .abs()
                    .partial_cmp(&m[r2][col].value().abs())
                    .unwrap()
            })
            .unwrap();
        if m[pivot_row][col].value().abs() <= SINGULAR_TOL * scale {
            return Err(Error::SingularConstantMatrix { col });
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);

        let pivot = m[col][col].clone();
        for row in 0..n {
            if row == col {
                continue;
            }
            let lead = m[row][col].clone();
            if lead.maxnorm() == 0.0 {
                continue;
            }
            let factor = lead
                .div(&pivot)
                .map_err(|_| Error::SingularConstantMatrix { col })?;
            for c in col..n {
                let delta = factor.mul(&m[col][c]);
                m[row][c] = m[row][c].sub(&delta);
            }
            for c in 0..k {
                let delta = factor.mul(&rhs[col][c]);
                rhs[row][c] = rhs[row][c].sub(&delta);
            }
        }
    }

    let mut x = Vec::with_capacity(n);
    for row in 0..n {
        let pivot = m[row][row].clone();
        let mut out_row = Vec::with_capacity(k);
        for c in 0..k {
            let v = rhs[row][c]
                .div(&pivot)
                .map_err(|_| Error::SingularConstantMatrix { col: row })?;
            out_row.push(v);
        }
        x.push(out_row);
    }
    Ok(x)
}

/// Plain-float determinant by LU with partial pivoting.
pub fn det_values(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| m[r1][col].abs().partial_cmp(&m[r2][col].abs()).unwrap())
            .unwrap();
        if m[pivot_row][col] == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            m.swap(col, pivot_row);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for c in col..n {
                m[row][c] -= f * m[col][c];
            }
        }
    }
    det
}

/// Plain-float inverse via the jet solver's elimination logic, specialised to
/// order-0 data. Returns `SingularConstantMatrix` on rank loss.
pub fn invert_values(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |s, v| s.max(v.abs()))
        .max(1.0);
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| m[r1][col].abs().partial_cmp(&m[r2][col].abs()).unwrap())
            .unwrap();
        if m[pivot_row][col].abs() <= SINGULAR_TOL * scale {
            return Err(Error::SingularConstantMatrix { col });
        }
        m.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let p = m[col][col];
        for c in 0..n {
            m[col][c] /= p;
            inv[col][c] /= p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row][col];
            if f == 0.0 {
                continue;
            }
            for c in 0..n {
                m[row][c] -= f * m[col][c];
                inv[row][c] -= f * inv[col][c];
            }
        }
    }
    Ok(inv)
}
