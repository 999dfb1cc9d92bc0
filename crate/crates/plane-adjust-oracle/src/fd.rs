use nalgebra::{DMatrix, DVector};

/// Central finite-difference settings.
#[derive(Debug, Clone, Copy)]
pub struct FdSpec {
    pub step: f64,
}

impl Default for FdSpec {
    fn default() -> Self {
        FdSpec { step: 1e-5 }
    }
}

impl FdSpec {
    /// Step sized for second-order stencils: at the default 1e-5 the
    /// `ε·f/h²` cancellation noise alone reaches ~1e-6 per entry, drowning a
    /// 1e-5 relative comparison; ~ε^(1/4) balances cancellation against
    /// truncation.
    pub fn second_order() -> Self {
        FdSpec { step: 1e-4 }
    }
}

/// Central-difference gradient `(f(x + h eᵢ) − f(x − h eᵢ)) / 2h`.
pub fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, x0: &DVector<f64>, spec: FdSpec) -> DVector<f64> {
    let h = spec.step;
    let n = x0.len();
    let mut grad = DVector::zeros(n);
    let mut x = x0.clone();
    for i in 0..n {
        x[i] = x0[i] + h;
        let plus = f(&x);
        x[i] = x0[i] - h;
        let minus = f(&x);
        x[i] = x0[i];
        grad[i] = (plus - minus) / (2.0 * h);
    }
    grad
}

/// Central-difference Hessian with the standard second-order stencils,
/// symmetrized on output.
pub fn fd_hessian(f: impl Fn(&DVector<f64>) -> f64, x0: &DVector<f64>, spec: FdSpec) -> DMatrix<f64> {
    let h = spec.step;
    let n = x0.len();
    let f0 = f(x0);
    let mut hess = DMatrix::zeros(n, n);
    let mut x = x0.clone();
    for i in 0..n {
        x[i] = x0[i] + h;
        let plus = f(&x);
        x[i] = x0[i] - h;
        let minus = f(&x);
        x[i] = x0[i];
        hess[(i, i)] = (plus - 2.0 * f0 + minus) / (h * h);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut probe = |si: f64, sj: f64| {
                x[i] = x0[i] + si * h;
                x[j] = x0[j] + sj * h;
                let value = f(&x);
                x[i] = x0[i];
                x[j] = x0[j];
                value
            };
            let value = (probe(1.0, 1.0) - probe(1.0, -1.0) - probe(-1.0, 1.0)
                + probe(-1.0, -1.0))
                / (4.0 * h * h);
            hess[(i, j)] = value;
            hess[(j, i)] = value;
        }
    }
    hess
}
