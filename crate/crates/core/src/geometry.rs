//! Small exact-geometry helpers: origin-in-hull by simplex enumeration and
//! rank tests on difference sets.

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3, Vector4};

/// Convex weights `lambda >= 0`, `sum lambda = 1`, `sum lambda p_i = 0` if the
/// origin lies in the convex hull of `points`; `None` otherwise.
///
/// Caratheodory: in three dimensions it is enough to enumerate simplices of
/// up to four points, which is exact and dependency-free at these sizes.
/// Returned weights are indexed like `points`, zero outside the simplex.
pub fn origin_hull_weights(points: &[Vector3<f64>]) -> Option<Vec<f64>> {
    const TOL: f64 = 1e-10;
    let n = points.len();

    // Pairs: origin on the segment between two points.
    for i in 0..n {
        for j in (i + 1)..n {
            let a = points[i];
            let b = points[j];
            // lambda a + (1 - lambda) b = 0 needs a, b anti-parallel.
            let denom = (a - b).norm_squared();
            if denom < TOL {
                continue;
            }
            let lambda = -(b.dot(&(a - b))) / denom;
            if (-TOL..=1.0 + TOL).contains(&lambda)
                && (a * lambda + b * (1.0 - lambda)).norm() <= TOL
            {
                let mut w = vec![0.0; n];
                w[i] = lambda.clamp(0.0, 1.0);
                w[j] = 1.0 - w[i];
                return Some(w);
            }
        }
    }

    // Triangles containing the origin in their plane.
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let m = Matrix3::from_columns(&[points[i], points[j], points[k]]);
                // Solve [p_i p_j p_k] lambda = 0 with sum lambda = 1 by least
                // squares on the stacked 4x3 system.
                let mut stacked = DMatrix::<f64>::zeros(4, 3);
                stacked.view_mut((0, 0), (3, 3)).copy_from(&m);
                stacked.view_mut((3, 0), (1, 3)).fill(1.0);
                let rhs = nalgebra::DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]);
                let svd = stacked.clone().svd(true, true);
                if let Ok(lambda) = svd.solve(&rhs, 1e-12) {
                    let residual = (&stacked * &lambda - &rhs).amax();
                    if residual <= TOL && lambda.iter().all(|&l| l >= -TOL) {
                        let mut w = vec![0.0; n];
                        w[i] = lambda[0].max(0.0);
                        w[j] = lambda[1].max(0.0);
                        w[k] = lambda[2].max(0.0);
                        return Some(w);
                    }
                }
            }
        }
    }

    // Tetrahedra.
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                for l in (k + 1)..n {
                    let cols = [points[i], points[j], points[k], points[l]];
                    let m = Matrix4::from_fn(|r, c| if r < 3 { cols[c][r] } else { 1.0 });
                    let rhs = Vector4::new(0.0, 0.0, 0.0, 1.0);
                    let lu = m.lu();
                    if let Some(lambda) = lu.solve(&rhs) {
                        let residual = (m * lambda - rhs).amax();
                        if residual <= TOL && lambda.iter().all(|&v| v >= -TOL) {
                            let mut w = vec![0.0; n];
                            for (idx, &orig) in [i, j, k, l].iter().enumerate() {
                                w[orig] = lambda[idx].max(0.0);
                            }
                            return Some(w);
                        }
                    }
                }
            }
        }
    }

    None
}

/// A unit vector `B` with `B . (p_0 - p_j) = 0` for all j, if the differences
/// span at most a plane; `None` when they have full rank.
///
/// Singular values below `1e-10` times the largest are treated as zero.
pub fn common_difference_normal(points: &[Vector3<f64>]) -> Option<Vector3<f64>> {
    if points.len() < 2 {
        return None;
    }
    let rows = points.len() - 1;
    let mut m = DMatrix::<f64>::zeros(rows, 3);
    for j in 1..points.len() {
        let d = points[0] - points[j];
        m.set_row(j - 1, &nalgebra::RowVector3::new(d.x, d.y, d.z));
    }
    let svd = m.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax.max(1e-300))
        .count();
    if rank >= 3 {
        return None;
    }
    let v_t = svd.v_t.expect("svd computed with vectors");
    // Rows of v_t beyond the rank span the null space.
    let row = v_t.row(v_t.nrows() - 1);
    let b = Vector3::new(row[0], row[1], row[2]);
    if b.norm() < 0.5 {
        return None;
    }
    Some(b.normalize())
}
