//! Analytical pole placement for the parallel observer.
//!
//! For harmonic orders `ν_1 … ν_n` and a desired pole set `p*` (normalized by
//! `ω̂`), the gain vector is `l = S p̃*`, where `p̃*` is the coefficient vector
//! of `Π (s − p_i*)` minus that of the unforced model `Π (s² + ν_i²)`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::observer::closed_loop_eigenvalues;
use crate::Complex64;

/// Relative eigenvalue tolerance used by [`place`].
pub const EIGENVALUE_TOLERANCE: f64 = 1e-8;
/// Above this condition number of `S` the placement logs it at debug level.
pub const CONDITION_WARNING: f64 = 1e8;

const REAL_ROOT_TOL: f64 = 1e-12;
const CONJUGATE_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PlacementError {
    #[error("invalid pole set: {0}")]
    InvalidPoles(String),
    #[error("pole {0} has no complex-conjugate partner")]
    NotConjugateClosed(Complex64),
    #[error("expected {expected} poles, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("index {k} out of range for {len} values")]
    IndexOutOfRange { k: usize, len: usize },
    #[error("harmonic orders must be positive and finite, got {0}")]
    InvalidOrder(f64),
    #[error("orders #{i} and #{j} coincide ({order}); S is singular")]
    SingularOrders { i: usize, j: usize, order: f64 },
    #[error(
        "placed eigenvalues miss the requested poles (max relative error {max_rel_error:e}); achieved {achieved:?}"
    )]
    NumericalConditioning { max_rel_error: f64, achieved: Vec<Complex64> },
}

/// Desired closed-loop poles, normalized by `ω̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSpec {
    poles: Vec<Complex64>,
}

impl PoleSpec {
    pub fn new(poles: Vec<Complex64>) -> Result<Self, PlacementError> {
        if poles.is_empty() {
            return Err(PlacementError::InvalidPoles("no poles given".into()));
        }
        if let Some(p) = poles.iter().find(|p| !(p.re < 0.0) || !p.im.is_finite()) {
            return Err(PlacementError::InvalidPoles(format!("pole {p} is not in the open left half-plane")));
        }
        pair_roots(&poles)?;
        Ok(Self { poles })
    }

    /// Each `(re, im)` with `im ≠ 0` contributes `re ± j|im|`; `im = 0` a single real pole.
    pub fn from_upper_half(pairs: &[(f64, f64)]) -> Result<Self, PlacementError> {
        let mut poles = Vec::with_capacity(2 * pairs.len());
        for &(re, im) in pairs {
            if im == 0.0 {
                poles.push(Complex64::new(re, 0.0));
            } else {
                poles.push(Complex64::new(re, im.abs()));
                poles.push(Complex64::new(re, -im.abs()));
            }
        }
        Self::new(poles)
    }

    /// `re ± jν` for every order, the default tuning of the parallel mSOGI.
    pub fn per_order(orders: &[f64], re: f64) -> Result<Self, PlacementError> {
        let pairs: Vec<(f64, f64)> = orders.iter().map(|&nu| (re, nu)).collect();
        Self::from_upper_half(&pairs)
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }
}

enum Factor {
    Real(f64),
    Pair(Complex64),
}

// Groups roots into real roots and conjugate pairs.
fn pair_roots(roots: &[Complex64]) -> Result<Vec<Factor>, PlacementError> {
    let mut used = vec![false; roots.len()];
    let mut factors = Vec::with_capacity(roots.len());
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let z = roots[i];
        let scale = z.norm().max(1.0);
        if z.im.abs() <= REAL_ROOT_TOL * scale {
            used[i] = true;
            factors.push(Factor::Real(z.re));
            continue;
        }
        let target = z.conj();
        let partner = (i + 1..roots.len())
            .filter(|&j| !used[j])
            .map(|j| (j, (roots[j] - target).norm()))
            .filter(|&(_, d)| d <= CONJUGATE_TOL * scale)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match partner {
            Some((j, _)) => {
                used[i] = true;
                used[j] = true;
                factors.push(Factor::Pair(Complex64::new(z.re, z.im.abs())));
            }
            None => return Err(PlacementError::NotConjugateClosed(z)),
        }
    }
    Ok(factors)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Monic real coefficients of `Π (s − r_i)`, highest power first.
pub fn poly_from_roots(roots: &[Complex64]) -> Result<Vec<f64>, PlacementError> {
    let mut coeffs = vec![1.0];
    for f in pair_roots(roots)? {
        coeffs = match f {
            Factor::Real(r) => poly_mul(&coeffs, &[1.0, -r]),
            Factor::Pair(z) => poly_mul(&coeffs, &[1.0, -2.0 * z.re, z.norm_sqr()]),
        };
    }
    Ok(coeffs)
}

/// All elementary symmetric functions `e_0 … e_m` of `values`.
pub fn elementary_symmetric_all(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (m, &v) in values.iter().enumerate() {
        for k in (1..=m + 1).rev() {
            e[k] += v * e[k - 1];
        }
    }
    e
}

/// `e_k(values)`, the sum over all k-subsets of their products.
pub fn elementary_symmetric(values: &[f64], k: usize) -> Result<f64, PlacementError> {
    if k > values.len() {
        return Err(PlacementError::IndexOutOfRange { k, len: values.len() });
    }
    Ok(elementary_symmetric_all(values)[k])
}

fn check_orders(orders: &[f64]) -> Result<(), PlacementError> {
    if let Some(&v) = orders.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(PlacementError::InvalidOrder(v));
    }
    for i in 0..orders.len() {
        for j in i + 1..orders.len() {
            if orders[i] == orders[j] {
                return Err(PlacementError::SingularOrders { i: i + 1, j: j + 1, order: orders[i] });
            }
        }
    }
    Ok(())
}

fn squares(orders: &[f64]) -> Vec<f64> {
    orders.iter().map(|v| v * v).collect()
}

/// `p̃*`: desired coefficients below the leading one, minus `(0, e_1(ν²), 0, e_2(ν²), …)`.
pub fn desired_coefficient_vector(orders: &[f64], poles: &PoleSpec) -> Result<Vec<f64>, PlacementError> {
    let dim = 2 * orders.len();
    if poles.len() != dim {
        return Err(PlacementError::SizeMismatch { expected: dim, got: poles.len() });
    }
    let coeffs = poly_from_roots(poles.poles())?;
    let e = elementary_symmetric_all(&squares(orders));
    Ok((1..=dim).map(|j| if j % 2 == 0 { coeffs[j] - e[j / 2] } else { coeffs[j] }).collect())
}

/// `S` with block `(r, c)` equal to `(−1)^{c+1} ν_r^{2(n−c)} R_r / Π_{i≠r}(ν_r² − ν_i²)`,
/// `R_r = diag(1, −1/ν_r)`.
pub fn build_s(orders: &[f64]) -> Result<DMatrix<f64>, PlacementError> {
    check_orders(orders)?;
    let n = orders.len();
    let sq = squares(orders);
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        let denom: f64 = (0..n).filter(|&i| i != r).map(|i| sq[r] - sq[i]).product();
        for c in 1..=n {
            let sign = if c % 2 == 1 { 1.0 } else { -1.0 };
            let v = sign * sq[r].powi((n - c) as i32) / denom;
            s[(2 * r, 2 * (c - 1))] = v;
            s[(2 * r + 1, 2 * (c - 1) + 1)] = -v / orders[r];
        }
    }
    Ok(s)
}

/// `S⁻¹` with block `(k, c)` equal to `e_k({ν_i² : i ≠ c}) diag(1, −ν_c)`, `k = 0 … n−1`.
pub fn build_s_inverse(orders: &[f64]) -> Result<DMatrix<f64>, PlacementError> {
    check_orders(orders)?;
    let n = orders.len();
    let sq = squares(orders);
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for c in 0..n {
        let others: Vec<f64> = (0..n).filter(|&i| i != c).map(|i| sq[i]).collect();
        let e = elementary_symmetric_all(&others);
        for k in 0..n {
            m[(2 * k, 2 * c)] = e[k];
            m[(2 * k + 1, 2 * c + 1)] = -e[k] * orders[c];
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementResult {
    pub l: Vec<f64>,
    pub k: Vec<f64>,
    pub g: Vec<f64>,
    /// Achieved eigenvalues of `J − l cᵀ`, matched to the requested pole order.
    pub eigenvalues: Vec<Complex64>,
    pub max_relative_error: f64,
    /// 2-norm condition number of `S`.
    pub condition: f64,
}

/// Pairs each requested pole with the closest unused achieved eigenvalue.
pub fn match_eigenvalues(requested: &[Complex64], achieved: &[Complex64]) -> (Vec<Complex64>, f64) {
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(requested.len() * achieved.len());
    for (i, p) in requested.iter().enumerate() {
        for (j, z) in achieved.iter().enumerate() {
            pairs.push((i, j, (p - z).norm()));
        }
    }
    pairs.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut out = vec![Complex64::new(f64::NAN, f64::NAN); requested.len()];
    let mut req_used = vec![false; requested.len()];
    let mut ach_used = vec![false; achieved.len()];
    let mut worst = 0.0f64;
    for (i, j, d) in pairs {
        if req_used[i] || ach_used[j] {
            continue;
        }
        req_used[i] = true;
        ach_used[j] = true;
        out[i] = achieved[j];
        worst = worst.max(d / requested[i].norm());
    }
    if req_used.iter().any(|u| !u) {
        worst = f64::INFINITY;
    }
    (out, worst)
}

/// `l = S p̃*`, evaluated literally as a matrix-vector product.
pub fn gain_vector_via_s(orders: &[f64], poles: &PoleSpec) -> Result<Vec<f64>, PlacementError> {
    let s = build_s(orders)?;
    let p = DVector::from_vec(desired_coefficient_vector(orders, poles)?);
    Ok((&s * p).iter().copied().collect())
}

/// `l = S p̃*` in Lagrange form.
///
/// Row block `r` of `S p̃*` interpolates `χ*(s)` at `s = jν_r`, so
/// `l_r = (Im χ*(jν_r) / ν_r, −Re χ*(jν_r) / ν_r) / Π_{i≠r}(ν_i² − ν_r²)`
/// with `χ*(jν_r) = Π_i (jν_r − p_i*)` taken as a product of factors. This skips
/// the cancellation between the coefficients of `χ*` and `Π(s² + ν_i²)`.
pub fn gain_vector(orders: &[f64], poles: &PoleSpec) -> Result<Vec<f64>, PlacementError> {
    check_orders(orders)?;
    let dim = 2 * orders.len();
    if poles.len() != dim {
        return Err(PlacementError::SizeMismatch { expected: dim, got: poles.len() });
    }
    let mut l = Vec::with_capacity(dim);
    for (r, &nu) in orders.iter().enumerate() {
        let at = Complex64::new(0.0, nu);
        let chi: Complex64 = poles.poles().iter().map(|p| at - p).product();
        let denom: f64 = orders.iter().enumerate().filter(|&(i, _)| i != r).map(|(_, &v)| v * v - nu * nu).product();
        l.push(chi.im / (nu * denom));
        l.push(-chi.re / (nu * denom));
    }
    Ok(l)
}

/// `χ_A(s)` and `χ_A'(s)` for `A = J − l cᵀ`, from
/// `χ_A(s) = Π_k q_k(s) + Σ_i (s l_2i − ν_i l_2i+1) Π_{k≠i} q_k(s)`, `q_k = s² + ν_k²`.
pub fn char_function(orders: &[f64], l: &[f64], s: Complex64) -> (Complex64, Complex64) {
    // (value, derivative) pairs multiplied by the product rule
    let mul = |a: (Complex64, Complex64), b: (Complex64, Complex64)| (a.0 * b.0, a.0 * b.1 + a.1 * b.0);
    let one = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let q: Vec<(Complex64, Complex64)> = orders.iter().map(|nu| (s * s + nu * nu, s * 2.0)).collect();
    let n = orders.len();
    // prefix/suffix products give Π_{k≠i} q_k without division
    let mut prefix = vec![one; n + 1];
    for k in 0..n {
        prefix[k + 1] = mul(prefix[k], q[k]);
    }
    let mut suffix = vec![one; n + 1];
    for k in (0..n).rev() {
        suffix[k] = mul(suffix[k + 1], q[k]);
    }
    let mut total = prefix[n];
    for (i, &nu) in orders.iter().enumerate() {
        let num = (s * l[2 * i] - nu * l[2 * i + 1], Complex64::new(l[2 * i], 0.0));
        let term = mul(num, mul(prefix[i], suffix[i + 1]));
        total = (total.0 + term.0, total.1 + term.1);
    }
    total
}

/// Newton refinement of an approximate eigenvalue of `J − l cᵀ` on its
/// characteristic function.
pub fn refine_eigenvalue(orders: &[f64], l: &[f64], start: Complex64) -> Complex64 {
    let mut s = start;
    let mut best = (char_function(orders, l, s).0.norm(), s);
    for _ in 0..60 {
        let (f, df) = char_function(orders, l, s);
        if df.norm() == 0.0 || !f.norm().is_finite() {
            break;
        }
        let step = f / df;
        s -= step;
        let fv = char_function(orders, l, s).0.norm();
        if fv < best.0 {
            best = (fv, s);
        }
        if step.norm() <= 4.0 * f64::EPSILON * s.norm() {
            break;
        }
    }
    best.1
}

/// Eigenvalues of `J − l cᵀ` refined from the requested poles.
///
/// Newton iterations on `χ_A` start at each requested pole. When the refined
/// roots are pairwise distinct they are all `2n` eigenvalues. Otherwise the
/// dense eigen-solver's values are refined and returned instead.
pub fn achieved_eigenvalues(orders: &[f64], l: &[f64], requested: &[Complex64]) -> Vec<Complex64> {
    let refined: Vec<Complex64> = requested.iter().map(|&p| refine_eigenvalue(orders, l, p)).collect();
    let distinct = (0..refined.len()).all(|i| {
        (i + 1..refined.len()).all(|j| {
            let scale = refined[i].norm().max(refined[j].norm()).max(1.0);
            (refined[i] - refined[j]).norm() > 1e-6 * scale
        })
    });
    if distinct && refined.len() == 2 * orders.len() {
        return refined;
    }
    closed_loop_eigenvalues(orders, l).into_iter().map(|z| refine_eigenvalue(orders, l, z)).collect()
}

/// Computes `l = S p̃*` and verifies the eigenvalues of `J − l cᵀ`.
pub fn place(orders: &[f64], poles: &PoleSpec) -> Result<PlacementResult, PlacementError> {
    let s = build_s(orders)?;
    let l = gain_vector(orders, poles)?;

    let sv = s.singular_values();
    let (hi, lo) = sv.iter().fold((0.0f64, f64::INFINITY), |(h, l), &v| (h.max(v), l.min(v)));
    let condition = hi / lo;
    if condition > CONDITION_WARNING {
        log::debug!("pole placement: S is poorly conditioned (cond = {condition:.3e}) for orders {orders:?}");
    }

    let achieved = achieved_eigenvalues(orders, &l, poles.poles());
    let (eigenvalues, max_relative_error) = match_eigenvalues(poles.poles(), &achieved);
    if !(max_relative_error < EIGENVALUE_TOLERANCE) {
        return Err(PlacementError::NumericalConditioning { max_rel_error: max_relative_error, achieved });
    }
    let k = orders.iter().enumerate().map(|(i, nu)| l[2 * i] / nu).collect();
    let g = orders.iter().enumerate().map(|(i, nu)| l[2 * i + 1] / nu).collect();
    Ok(PlacementResult { l, k, g, eigenvalues, max_relative_error, condition })
}

/// Coefficients of `χ_A(s) = Π(s² + ν_i²) − Σ g_i ν_i² Π_{k≠i}(s² + ν_k²) + s Σ k_i ν_i Π_{k≠i}(s² + ν_k²)`,
/// highest power first.
pub fn char_poly_coeffs(orders: &[f64], l: &[f64]) -> Result<Vec<f64>, PlacementError> {
    let n = orders.len();
    if l.len() != 2 * n {
        return Err(PlacementError::SizeMismatch { expected: 2 * n, got: l.len() });
    }
    let quad = |nu: f64| [1.0, 0.0, nu * nu];
    let mut chi = orders.iter().fold(vec![1.0], |acc, &nu| poly_mul(&acc, &quad(nu)));
    let dim = 2 * n;
    for i in 0..n {
        let rest = orders
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .fold(vec![1.0], |acc, (_, &nu)| poly_mul(&acc, &quad(nu)));
        // rest has degree 2n−2; align its constant term with chi's
        let ka = l[2 * i];
        let gb = l[2 * i + 1] * orders[i];
        for (m, &r) in rest.iter().enumerate() {
            let deg = 2 * n - 2 - m;
            chi[dim - deg] -= gb * r;
            chi[dim - deg - 1] += ka * r;
        }
    }
    Ok(chi)
}
