//! Chain rule from scatter-entry derivatives to derivatives of the
//! characteristic-cubic coefficients `(a, b, c)`.
//!
//! The coefficients are degree-1/2/3 polynomials in the entries of `M`, so
//! with `dM` and `d²M` in hand everything reduces to trace identities:
//!
//! ```text
//! a = tr M            da = tr dM
//! b = (tr M² − a²)/2  db = tr(M dM) − a·tr dM
//! c = det M           dc = tr(adj(M) dM),   adj(M) = M² − aM − bI
//! ```
//!
//! Second derivatives follow by differentiating once more; the `adj`
//! directional derivative is `M dN + dN M − tr(dN) M − a dN − db[dN] I`.

use nalgebra::{Matrix3, Matrix6, Matrix6x3, Vector6};

use super::partials::{CrossPartials, OwnPartials};
use crate::geometry::characteristic_coeffs;

/// Gradients of the cubic coefficients with respect to one pose's parameters.
#[derive(Debug, Clone)]
pub struct AbcFirst {
    pub da: Vector6<f64>,
    pub db: Vector6<f64>,
    pub dc: Vector6<f64>,
}

impl AbcFirst {
    /// The 6×3 stack `[da, db, dc]` used by the gradient formula.
    pub fn delta(&self) -> Matrix6x3<f64> {
        Matrix6x3::from_columns(&[self.da, self.db, self.dc])
    }
}

/// Second-derivative blocks of the cubic coefficients for a pose pair
/// (`j = k` for diagonal blocks).
#[derive(Debug, Clone)]
pub struct AbcSecond {
    pub ha: Matrix6<f64>,
    pub hb: Matrix6<f64>,
    pub hc: Matrix6<f64>,
}

fn adjugate(m: &Matrix3<f64>) -> Matrix3<f64> {
    let coeffs = characteristic_coeffs(m);
    m * m - m * coeffs.a - Matrix3::identity() * coeffs.b
}

/// First derivatives of `(a, b, c)` with respect to one pose.
pub fn abc_first(m: &Matrix3<f64>, partials: &OwnPartials) -> AbcFirst {
    let a = m.trace();
    let adj = adjugate(m);
    let mut out = AbcFirst {
        da: Vector6::zeros(),
        db: Vector6::zeros(),
        dc: Vector6::zeros(),
    };
    for idx in 0..6 {
        let dm = &partials.first[idx];
        let tr_dm = dm.trace();
        out.da[idx] = tr_dm;
        out.db[idx] = (m * dm).trace() - a * tr_dm;
        out.dc[idx] = (adj * dm).trace();
    }
    out
}

/// Second derivatives of `(a, b, c)` for the diagonal block (`j = k`).
pub fn abc_second_own(m: &Matrix3<f64>, partials: &OwnPartials) -> AbcSecond {
    abc_second(m, &partials.first, &partials.first, &partials.second)
}

/// Second derivatives of `(a, b, c)` for a cross block (`j ≠ k`); needs the
/// first-order partials of both poses and the cross second-order partials.
pub fn abc_second_cross(
    m: &Matrix3<f64>,
    partials_j: &OwnPartials,
    partials_k: &OwnPartials,
    cross: &CrossPartials,
) -> AbcSecond {
    abc_second(m, &partials_j.first, &partials_k.first, &cross.second)
}

fn abc_second(
    m: &Matrix3<f64>,
    first_j: &[Matrix3<f64>; 6],
    first_k: &[Matrix3<f64>; 6],
    second: &[[Matrix3<f64>; 6]; 6],
) -> AbcSecond {
    let a = m.trace();
    let adj = adjugate(m);

    // per-direction scalars reused across the 36 entries
    let tr_j: [f64; 6] = std::array::from_fn(|i| first_j[i].trace());
    let tr_k: [f64; 6] = std::array::from_fn(|i| first_k[i].trace());
    let trm_j: [f64; 6] = std::array::from_fn(|i| (m * first_j[i]).trace());
    let trm_k: [f64; 6] = std::array::from_fn(|i| (m * first_k[i]).trace());

    let mut ha = Matrix6::zeros();
    let mut hb = Matrix6::zeros();
    let mut hc = Matrix6::zeros();
    for mi in 0..6 {
        for ni in 0..6 {
            let dm = &first_j[mi];
            let dn = &first_k[ni];
            let d2 = &second[mi][ni];
            let tr_d2 = d2.trace();
            let tr_dn_dm = (dn * dm).trace();

            ha[(mi, ni)] = tr_d2;
            hb[(mi, ni)] = tr_dn_dm - tr_j[mi] * tr_k[ni] + (m * d2).trace() - a * tr_d2;
            hc[(mi, ni)] = (m * dn * dm).trace() + (dn * m * dm).trace()
                - a * tr_dn_dm
                - tr_k[ni] * trm_j[mi]
                - trm_k[ni] * tr_j[mi]
                + a * tr_k[ni] * tr_j[mi]
                + (adj * d2).trace();
        }
    }
    AbcSecond { ha, hb, hc }
}
