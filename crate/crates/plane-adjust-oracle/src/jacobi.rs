use nalgebra::{Matrix3, Vector3};

/// Full symmetric 3×3 eigendecomposition from the Jacobi oracle.
#[derive(Debug, Clone)]
pub struct JacobiEigen {
    /// Eigenvalues, ascending.
    pub values: [f64; 3],
    /// Unit eigenvectors matching `values`; sign fixed so each vector's first
    /// component above 1e-9 in magnitude is positive.
    pub vectors: [Vector3<f64>; 3],
}

/// Classical cyclic Jacobi rotations, iterated until the off-diagonal norm
/// drops below `1e-14 · max(1, ‖M‖_F)`. Independent of the characteristic-
/// cubic path used by the production eigensolver.
pub fn jacobi_eigensolve(m: &Matrix3<f64>) -> JacobiEigen {
    let mut a = *m;
    let mut v = Matrix3::<f64>::identity();
    let tol = 1e-14 * 1.0_f64.max(m.norm());
    for _sweep in 0..64 {
        let off = (a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2)).sqrt();
        if off < tol {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            // rotation angle annihilating a[p][q]
            let theta = 0.5 * (2.0 * apq).atan2(a[(q, q)] - a[(p, p)]);
            let (s, c) = theta.sin_cos();
            let mut rot = Matrix3::<f64>::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            a = rot.transpose() * a * rot;
            v *= rot;
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let values = [
        a[(order[0], order[0])],
        a[(order[1], order[1])],
        a[(order[2], order[2])],
    ];
    let vectors = [
        fix_sign(v.column(order[0]).into_owned().normalize()),
        fix_sign(v.column(order[1]).into_owned().normalize()),
        fix_sign(v.column(order[2]).into_owned().normalize()),
    ];
    JacobiEigen { values, vectors }
}

fn fix_sign(v: Vector3<f64>) -> Vector3<f64> {
    for i in 0..3 {
        if v[i].abs() > 1e-9 {
            return if v[i] < 0.0 { -v } else { v };
        }
    }
    v
}
