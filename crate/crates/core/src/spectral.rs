//! Eigen-decomposition of the mean-zero pressure-to-displacement operator.
//!
//! The half-space kernel K(x) = −log|x| + C_K is discretised on a composite
//! Gauss-Legendre grid over (−a, a). Panels are uniform in the interior and
//! geometrically graded towards ±a, where eigenfunctions carry
//! (a ∓ x)·log(a ∓ x) terms. The log singularity is integrated exactly
//! against the panel's interpolating polynomial for nearby panels (product
//! integration through Legendre moments of log|t − s|); distant panels use
//! the plain Gauss rule.
//!
//! The resulting Nyström matrix is symmetrised in the weighted inner product,
//! corrected with K₁ into the K₂ kernel and deflated against the constant
//! function before the dense symmetric eigen-solve.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Result, WearError};
use crate::quad::{barycentric_eval, legendre_values, GaussLegendre};
use crate::special_functions::FracOrder;

/// Gauss-Legendre nodes per grid panel.
pub const PANEL_ORDER: usize = 16;
/// Ratio between consecutive graded panels near the contact edges.
const GRADING_RATIO: f64 = 0.25;
/// Sub-rule used for near-singular moments outside the source panel.
const NEAR_RULE: usize = 24;

/// Physical and model constants of the wear problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    a: f64,
    eta: f64,
    nu: f64,
    mu: f64,
    alpha: FracOrder,
    c_k: f64,
}

impl ModelParams {
    pub fn new(a: f64, eta: f64, nu: f64, mu: f64, alpha: f64, c_k: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(WearError::invalid(
                "a",
                a,
                "contact half-width must satisfy a > 0",
            ));
        }
        if (a - 2.0).abs() <= 1e-12 {
            return Err(WearError::invalid(
                "a",
                a,
                "a ≠ 2 is required for the operator K₂ to have a trivial kernel",
            ));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(WearError::invalid(
                "eta",
                eta,
                "coating compliance must satisfy η > 0",
            ));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(WearError::invalid(
                "nu",
                nu,
                "wear coefficient must satisfy ν > 0",
            ));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(WearError::invalid(
                "mu",
                mu,
                "relaxation parameter must satisfy μ ≥ 0",
            ));
        }
        let order = FracOrder::new(alpha).map_err(|_| {
            WearError::invalid("alpha", alpha, "fractional order must satisfy α ∈ (0, 2)")
        })?;
        if !(c_k > a.ln() && c_k.is_finite()) {
            return Err(WearError::invalid(
                "c_k",
                c_k,
                format!("kernel constant must satisfy C_K > log a = {}", a.ln()),
            ));
        }
        Ok(Self {
            a,
            eta,
            nu,
            mu,
            alpha: order,
            c_k,
        })
    }

    /// Parameter set of the reference experiment: a = 1, ν = 2, η = 1,
    /// μ = 1.2, C_K = log 5.
    pub fn reference(alpha: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 2.0, 1.2, alpha, 5f64.ln())
    }

    pub fn with_mu(self, mu: f64) -> Result<Self> {
        Self::new(self.a, self.eta, self.nu, mu, self.alpha.value(), self.c_k)
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(self.a, self.eta, self.nu, self.mu, alpha, self.c_k)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn alpha(&self) -> FracOrder {
        self.alpha
    }
    pub fn c_k(&self) -> f64 {
        self.c_k
    }

    /// Modal relaxation rate β = μ + ν/(η + σ).
    pub fn beta(&self, sigma: f64) -> f64 {
        self.mu + self.nu / (self.eta + sigma)
    }
}

/// K(x) = −log|x| + C_K. Returns +∞ at x = 0.
pub fn kernel_k(x: f64, params: &ModelParams) -> f64 {
    if x == 0.0 {
        return f64::INFINITY;
    }
    -x.abs().ln() + params.c_k
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// K₁(x) = ∫_{−a}^{a} K(ζ − x) dζ
///       = 2a(1 + C_K) − (a + x)log(a + x) − (a − x)log(a − x).
pub fn kernel_k1(x: f64, params: &ModelParams) -> Result<f64> {
    let a = params.a;
    if !(x.abs() <= a) {
        return Err(WearError::Domain(format!(
            "kernel_k1 needs |x| <= a = {a}, got {x}"
        )));
    }
    Ok(2.0 * a * (1.0 + params.c_k) - xlogx(a + x) - xlogx(a - x))
}

/// Composite Gauss-Legendre grid on (−a, a).
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    /// Panel breakpoints, increasing, from −a to a.
    breaks: Vec<f64>,
    rule: GaussLegendre,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    /// Builds a grid with `n_grid` nodes (a multiple of [`PANEL_ORDER`]).
    pub fn new(a: f64, n_grid: usize) -> Result<Self> {
        if !n_grid.is_multiple_of(PANEL_ORDER) || n_grid < 4 * PANEL_ORDER {
            return Err(WearError::Input(format!(
                "n_grid = {n_grid} must be a multiple of {PANEL_ORDER} and at least {}",
                4 * PANEL_ORDER
            )));
        }
        let n_panels = n_grid / PANEL_ORDER;
        let graded = (n_panels / 4).min(6);
        let middle = n_panels - 2 * graded;
        // Graded widths h·r, h·r², …, h·r^{graded}; the smallest touches the edge.
        let graded_total: f64 = (1..=graded).map(|j| GRADING_RATIO.powi(j as i32)).sum();
        let h = 2.0 * a / (middle as f64 + 2.0 * graded_total);
        let mut left = Vec::with_capacity(graded + 1);
        let mut x = -a;
        left.push(x);
        for j in (1..=graded).rev() {
            x += h * GRADING_RATIO.powi(j as i32);
            left.push(x);
        }
        let mut breaks = left.clone();
        let start = x;
        for i in 1..=middle {
            breaks.push(start + h * i as f64);
        }
        // Mirror the left graded block onto the right edge.
        for &b in left.iter().rev().skip(1) {
            breaks.push(-b);
        }
        *breaks.last_mut().expect("non-empty") = a;
        breaks[0] = -a;

        let rule = GaussLegendre::new(PANEL_ORDER);
        let mut nodes = Vec::with_capacity(n_grid);
        let mut weights = Vec::with_capacity(n_grid);
        for w in breaks.windows(2) {
            for (x, wt) in rule.mapped(w[0], w[1]) {
                nodes.push(x);
                weights.push(wt);
            }
        }
        Ok(Self {
            breaks,
            rule,
            nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn n_panels(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    fn panel_of(&self, x: f64) -> usize {
        let p = self.breaks.partition_point(|&b| b <= x);
        p.saturating_sub(1).min(self.n_panels() - 1)
    }

    /// Evaluates the piecewise interpolant of grid samples `values` at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let p = self.panel_of(x);
        let (lo, hi) = (self.breaks[p], self.breaks[p + 1]);
        let t = (2.0 * x - lo - hi) / (hi - lo);
        let slice = &values[p * PANEL_ORDER..(p + 1) * PANEL_ORDER];
        barycentric_eval(&self.rule.nodes, &self.rule.bary, slice, t)
    }
}

/// μ_n(t) = ∫_{−1}^{1} log|t − s| P_n(s) ds for n < out.len().
fn log_moments(t: f64, out: &mut [f64]) {
    let n = out.len();
    if t.abs() < 1.0 {
        // Ferrers functions of the second kind: PV∫ P_m(s)/(t−s) ds = 2 Q_m(t).
        let mut q = vec![0.0; n + 1];
        q[0] = 0.5 * ((1.0 + t) / (1.0 - t)).ln();
        if n >= 1 {
            q[1] = t * q[0] - 1.0;
        }
        for m in 1..n {
            let mf = m as f64;
            q[m + 1] = ((2.0 * mf + 1.0) * t * q[m] - mf * q[m - 1]) / (mf + 1.0);
        }
        out[0] = xlogx(1.0 + t) + xlogx(1.0 - t) - 2.0;
        for k in 1..n {
            out[k] = 2.0 * (q[k + 1] - q[k - 1]) / (2.0 * k as f64 + 1.0);
        }
        return;
    }
    // Outside the panel: integrand analytic but close to singular near the
    // nearer endpoint; subdivide geometrically towards it.
    let sign = if t > 0.0 { 1.0 } else { -1.0 };
    let tt = t.abs();
    let delta = tt - 1.0;
    out.iter_mut().for_each(|v| *v = 0.0);
    let rule = GaussLegendre::new(NEAR_RULE);
    let mut p = vec![0.0; n];
    let mut right = 1.0;
    let mut len = delta.clamp(1e-3, 2.0);
    while right > -1.0 {
        let left = (right - len).max(-1.0);
        for (s, w) in rule.mapped(left, right) {
            legendre_values(s, &mut p);
            let lg = (tt - s).ln();
            for k in 0..n {
                out[k] += w * lg * p[k];
            }
        }
        right = left;
        len *= 2.0;
    }
    if sign < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
}

/// Nyström matrix of the operator f ↦ ∫ K(x − ξ) f(ξ) dξ on the grid:
/// (K f)(x_i) ≈ Σ_j B_ij f_j.
pub fn assemble_operator(grid: &QuadratureGrid, params: &ModelParams) -> DMatrix<f64> {
    let n = grid.len();
    let q = PANEL_ORDER;
    let rule = &grid.rule;
    // coef[m][k] = λ_m (2k+1)/2 P_k(s_m): Lagrange basis in Legendre coordinates.
    let coef: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&s, &lam)| {
            let mut p = vec![0.0; q];
            legendre_values(s, &mut p);
            (0..q)
                .map(|k| lam * (2.0 * k as f64 + 1.0) / 2.0 * p[k])
                .collect()
        })
        .collect();
    let c_k = params.c_k;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = grid.nodes[i];
            let mut row = vec![0.0; n];
            let mut mu = vec![0.0; q];
            for p in 0..grid.n_panels() {
                let (lo, hi) = (grid.breaks[p], grid.breaks[p + 1]);
                let c = 0.5 * (lo + hi);
                let h = 0.5 * (hi - lo);
                let t = (xi - c) / h;
                let base = p * q;
                if t.abs() >= 2.0 {
                    for m in 0..q {
                        let j = base + m;
                        row[j] = grid.weights[j] * kernel_k(xi - grid.nodes[j], params);
                    }
                } else {
                    log_moments(t, &mut mu);
                    for m in 0..q {
                        let log_int: f64 = coef[m].iter().zip(&mu).map(|(c, u)| c * u).sum();
                        row[base + m] = h * ((c_k - h.ln()) * rule.weights[m] - log_int);
                    }
                }
            }
            row
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Eigenpairs of K₂ on the mean-zero subspace, with projections of the
/// initial pressure and of K₁.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    a: f64,
    c_k: f64,
    grid: QuadratureGrid,
    operator: DMatrix<f64>,
    sigma: Vec<f64>,
    /// phi[k][i] = φ_{k+1}(x_i).
    phi: Vec<Vec<f64>>,
    k1: Vec<f64>,
    d0: Vec<f64>,
    l: Vec<f64>,
    initial: Vec<f64>,
    p0_total: f64,
}

/// Computes the `n_modes` largest eigenpairs of K₂ on a grid of `n_grid` nodes.
pub fn build_basis(params: &ModelParams, n_modes: usize, n_grid: usize) -> Result<SpectralBasis> {
    if n_modes == 0 {
        return Err(WearError::Input("n_modes must be at least 1".into()));
    }
    if n_grid < 4 * n_modes {
        return Err(WearError::Input(format!(
            "n_grid = {n_grid} must be at least 4·n_modes = {}",
            4 * n_modes
        )));
    }
    build_basis_unchecked(params, n_modes, n_grid)
}

/// Like [`build_basis`] but without the n_grid ≥ 4·n_modes resolution rule;
/// allows keeping every non-constant mode (n_modes = n_grid − 1).
pub fn build_basis_unchecked(
    params: &ModelParams,
    n_modes: usize,
    n_grid: usize,
) -> Result<SpectralBasis> {
    let grid = QuadratureGrid::new(params.a, n_grid)?;
    let n = grid.len();
    if n_modes == 0 || n_modes >= n {
        return Err(WearError::Input(format!(
            "n_modes = {n_modes} must lie in 1..{n}"
        )));
    }
    let operator = assemble_operator(&grid, params);
    let a = params.a;
    let k1: Vec<f64> = grid
        .nodes
        .iter()
        .map(|&x| kernel_k1(x, params).expect("grid nodes lie inside (-a, a)"))
        .collect();
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();

    // K₂ in the similarity-transformed form √w_i A_ij / √w_j. Product
    // integration makes it slightly non-symmetric.
    let mut t = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            t[(i, j)] =
                sw[i] * operator[(i, j)] / sw[j] - sw[i] * sw[j] * (k1[i] + k1[j]) / (2.0 * a);
        }
    }

    // Deflate the constant function: T ← P T P with P = I − c cᵀ.
    let norm: f64 = sw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c = DVector::from_iterator(n, sw.iter().map(|v| v / norm));
    let tc = &t * &c;
    let ct = t.tr_mul(&c);
    let ctc = c.dot(&tc);
    let proj = t - &tc * c.transpose() - &c * ct.transpose() + (&c * c.transpose()) * ctc;

    // Eigenpairs of the symmetric part, sorted by decreasing eigenvalue.
    let eig = SymmetricEigen::new((&proj + proj.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let lambda: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let u = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    for (k, &lam) in lambda.iter().take(n_modes).enumerate() {
        if !(lam > 0.0) {
            return Err(WearError::Convergence(format!(
                "eigenvalue {} of K₂ is {lam} ≤ 0; the grid is under-resolved for {n_modes} modes",
                k + 1
            )));
        }
    }

    // The symmetric part has accurate eigenvalues but only first-order
    // accurate eigenvectors; recover right eigenvectors of the full matrix,
    // which is nearly diagonal in the symmetric eigenbasis.
    let m = u.tr_mul(&(&proj * &u));
    // Under-resolved modes (near-degenerate gaps) keep the symmetric-part vector.
    let refined: Vec<(f64, DVector<f64>)> = (0..n_modes)
        .into_par_iter()
        .map(|k| {
            refine_mode(&m, &lambda, k).unwrap_or_else(|| {
                let mut x = DVector::zeros(n);
                x[k] = 1.0;
                (lambda[k], x)
            })
        })
        .collect();

    let mut sigma = Vec::with_capacity(n_modes);
    let mut phi: Vec<Vec<f64>> = Vec::with_capacity(n_modes);
    for (lam, x) in refined {
        let v = &u * x;
        let mut f: Vec<f64> = (0..n).map(|i| v[i] / sw[i]).collect();
        let mean = grid.integrate(&f) / (2.0 * a);
        f.iter_mut().for_each(|x| *x -= mean);
        // Right eigenvectors are orthogonal only up to discretisation error.
        for _ in 0..2 {
            for g in &phi {
                let proj = grid.integrate(&mul(&f, g));
                f.iter_mut().zip(g).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let nrm = grid.integrate(&mul(&f, &f)).sqrt();
        f.iter_mut().for_each(|x| *x /= nrm);
        gauge(&grid, &mut f, a);
        sigma.push(lam);
        phi.push(f);
    }

    Ok(SpectralBasis {
        a,
        c_k: params.c_k,
        grid,
        operator,
        sigma,
        phi,
        k1,
        d0: Vec::new(),
        l: Vec::new(),
        initial: Vec::new(),
        p0_total: f64::NAN,
    })
}

/// Solves M x = λ x for the eigenpair continuing the k-th diagonal entry of a
/// matrix M = diag(lambda) + small perturbation, normalised by x_k = 1.
fn refine_mode(m: &DMatrix<f64>, lambda: &[f64], k: usize) -> Option<(f64, DVector<f64>)> {
    let n = lambda.len();
    let mut x = DVector::<f64>::zeros(n);
    x[k] = 1.0;
    for _ in 0..200 {
        let y = m * &x;
        let lam = y[k];
        let mut change = 0.0_f64;
        for j in 0..n {
            if j == k {
                continue;
            }
            let next = (y[j] - lambda[j] * x[j]) / (lam - lambda[j]);
            change = change.max((next - x[j]).abs());
            x[j] = next;
        }
        if !change.is_finite() || change > 1e3 {
            return None;
        }
        if change <= 1e-15 {
            return Some((lam, x));
        }
    }
    None
}

/// Fixes the sign of an eigenvector: ∫ φ (x/a + x²/a²) dx > 0.
fn gauge(grid: &QuadratureGrid, f: &mut [f64], a: f64) {
    let s: f64 = f
        .iter()
        .zip(grid.nodes())
        .zip(grid.weights())
        .map(|((v, &x), w)| v * w * (x / a + (x / a).powi(2)))
        .sum();
    let flip = if s.abs() > 1e-12 {
        s < 0.0
    } else {
        let imax = f
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        f[imax] < 0.0
    };
    if flip {
        f.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Initial pressure (2P₀/(a²π))·√(a² − x²), which carries total load P₀.
pub fn semicircle(a: f64, p0_total: f64) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
    move |x: f64| {
        let r = a * a - x * x;
        if r <= 0.0 {
            0.0
        } else {
            2.0 * p0_total / (a * a * std::f64::consts::PI) * r.sqrt()
        }
    }
}

impl SpectralBasis {
    /// Fills d_k⁰ = ∫ p0 φ_k and l_k = (1/2a) ∫ K₁ φ_k.
    ///
    /// Rejects `p0` whose integral differs from `p0_total` by more than 1e−8·P₀.
    pub fn project_initial<F: Fn(f64) -> f64>(mut self, p0: F, p0_total: f64) -> Result<Self> {
        if !(p0_total > 0.0) {
            return Err(WearError::invalid(
                "p0_total",
                p0_total,
                "P₀ > 0 is required",
            ));
        }
        let samples: Vec<f64> = self.grid.nodes.iter().map(|&x| p0(x)).collect();
        let total = self.grid.integrate(&samples);
        if (total - p0_total).abs() > 1e-8 * p0_total {
            return Err(WearError::Input(format!(
                "initial pressure integrates to {total}, expected P0 = {p0_total}"
            )));
        }
        let a = self.a;
        self.d0 = self
            .phi
            .iter()
            .map(|f| self.grid.integrate(&mul(f, &samples)))
            .collect();
        self.l = self
            .phi
            .iter()
            .map(|f| self.grid.integrate(&mul(f, &self.k1)) / (2.0 * a))
            .collect();
        self.initial = samples;
        self.p0_total = p0_total;
        Ok(self)
    }

    pub fn is_projected(&self) -> bool {
        !self.d0.is_empty()
    }

    pub fn n_modes(&self) -> usize {
        self.sigma.len()
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn c_k(&self) -> f64 {
        self.c_k
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn d0(&self) -> &[f64] {
        &self.d0
    }

    pub fn l(&self) -> &[f64] {
        &self.l
    }

    /// Samples of φ_{k+1} on the grid nodes (0-based `k`).
    pub fn phi(&self, k: usize) -> &[f64] {
        &self.phi[k]
    }

    /// Samples of the projected initial pressure on the grid nodes.
    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn p0_total(&self) -> f64 {
        self.p0_total
    }

    /// K₁ at the grid nodes.
    pub fn k1(&self) -> &[f64] {
        &self.k1
    }

    /// φ_{k+1}(x) by barycentric interpolation (0-based `k`).
    pub fn phi_at(&self, k: usize, x: f64) -> f64 {
        self.grid.interpolate(&self.phi[k], x)
    }

    /// All retained eigenfunctions evaluated at `x`.
    pub fn modes_at(&self, x: f64) -> Vec<f64> {
        self.phi
            .iter()
            .map(|f| self.grid.interpolate(f, x))
            .collect()
    }

    /// Applies the discrete operator f ↦ ∫K(x − ξ)f(ξ)dξ to grid samples.
    pub fn apply_kernel(&self, values: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(values);
        (&self.operator * v).iter().copied().collect()
    }

    /// The discrete operator matrix (rows: targets, columns: grid samples).
    pub fn operator(&self) -> &DMatrix<f64> {
        &self.operator
    }

    /// Keeps only the leading `n` modes.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_modes() {
            return Err(WearError::Input(format!(
                "cannot truncate {} modes to {n}",
                self.n_modes()
            )));
        }
        let mut out = self.clone();
        out.sigma.truncate(n);
        out.phi.truncate(n);
        if out.is_projected() {
            out.d0.truncate(n);
            out.l.truncate(n);
        }
        Ok(out)
    }

    /// Flips the sign of φ_{k+1} together with d_k⁰ and l_k.
    pub fn flip_sign(&mut self, k: usize) {
        self.phi[k].iter_mut().for_each(|v| *v = -*v);
        if self.is_projected() {
            self.d0[k] = -self.d0[k];
            self.l[k] = -self.l[k];
        }
    }

    pub(crate) fn require_projected(&self) -> Result<()> {
        if self.is_projected() {
            Ok(())
        } else {
            Err(WearError::Input(
                "spectral basis has no initial-data projection; call project_initial first".into(),
            ))
        }
    }

    pub(crate) fn check_params(&self, params: &ModelParams) -> Result<()> {
        if self.a != params.a || self.c_k != params.c_k {
            return Err(WearError::Input(format!(
                "basis was built for a = {}, C_K = {} but params have a = {}, C_K = {}",
                self.a, self.c_k, params.a, params.c_k
            )));
        }
        Ok(())
    }
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive;

    fn reference() -> ModelParams {
        ModelParams::reference(1.0).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParams::new(2.0, 1.0, 2.0, 1.2, 1.0, 5f64.ln()).is_err());
        assert!(ModelParams::new(1.0, 1.0, 2.0, 1.2, 1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 2.0, 1.2, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0, 1.2, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 2.0, -0.1, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 2.0, 0.0, 2.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 2.0, 0.0, 1.0, 1.0).is_ok());
        let err = ModelParams::new(2.0, 1.0, 2.0, 1.2, 1.0, 5f64.ln()).unwrap_err();
        assert!(err.to_string().contains("a ≠ 2"));
    }

    #[test]
    fn kernel_values() {
        let p = reference();
        assert!((kernel_k(1.0, &p) - 1.609_437_912_434_100_3).abs() < 1e-15);
        assert_eq!(kernel_k(-1.0, &p), kernel_k(1.0, &p));
        assert!((kernel_k(0.5, &p) - std::f64::consts::LN_10).abs() < 1e-14);
        assert_eq!(kernel_k(0.0, &p), f64::INFINITY);
    }

    #[test]
    fn kernel_k1_closed_form_matches_quadrature() {
        let p = reference();
        assert!((kernel_k1(0.0, &p).unwrap() - 2.0 * (1.0 + 5f64.ln())).abs() < 1e-14);
        let edge = 2.0 * (1.0 + p.c_k) - 2.0 * 2f64.ln();
        assert!((kernel_k1(1.0, &p).unwrap() - edge).abs() < 1e-14);
        assert!(kernel_k1(1.0 + 1e-9, &p).is_err());
        for x in [0.0, 0.3, -0.7, 0.95] {
            let f = |z: f64| kernel_k(z - x, &p);
            let q =
                adaptive(f, -1.0, x, 1e-14, 1e-15).value + adaptive(f, x, 1.0, 1e-14, 1e-15).value;
            assert!((q - kernel_k1(x, &p).unwrap()).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn log_moments_match_adaptive_quadrature() {
        let mut mu = vec![0.0; PANEL_ORDER];
        for t in [0.0, 0.5, -0.93, 0.999, 1.001, -1.3, 1.9] {
            log_moments(t, &mut mu);
            for k in 0..PANEL_ORDER {
                let f = |s: f64| {
                    if s == t {
                        return 0.0;
                    }
                    let mut pv = vec![0.0; k + 1];
                    legendre_values(s, &mut pv);
                    (t - s).abs().ln() * pv[k]
                };
                let q = if t.abs() < 1.0 {
                    adaptive(f, -1.0, t, 1e-14, 1e-16).value
                        + adaptive(f, t, 1.0, 1e-14, 1e-16).value
                } else {
                    adaptive(f, -1.0, 1.0, 1e-14, 1e-16).value
                };
                assert!((q - mu[k]).abs() < 1e-12, "t={t} k={k}: {q} vs {}", mu[k]);
            }
        }
    }

    #[test]
    fn grid_layout() {
        let g = QuadratureGrid::new(1.0, 512).unwrap();
        assert_eq!(g.len(), 512);
        assert_eq!(g.breaks()[0], -1.0);
        assert_eq!(*g.breaks().last().unwrap(), 1.0);
        assert!((g.weights().iter().sum::<f64>() - 2.0).abs() < 1e-13);
        for w in g.breaks().windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(QuadratureGrid::new(1.0, 500).is_err());
    }

    #[test]
    fn operator_row_sums_reproduce_k1() {
        let p = reference();
        let g = QuadratureGrid::new(1.0, 256).unwrap();
        let b = assemble_operator(&g, &p);
        for i in 0..g.len() {
            let s: f64 = b.row(i).iter().sum();
            let want = kernel_k1(g.nodes()[i], &p).unwrap();
            assert!((s - want).abs() < 1e-12, "row {i}: {s} vs {want}");
        }
    }

    #[test]
    fn semicircle_integrates_to_load() {
        let g = QuadratureGrid::new(1.0, 512).unwrap();
        let f = semicircle(1.0, 6.0);
        let v: Vec<f64> = g.nodes().iter().map(|&x| f(x)).collect();
        assert!((g.integrate(&v) - 6.0).abs() < 1e-8 * 6.0);
    }
}
