//! Least-squares similarity alignment between point sets (per-frame use).

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Result of aligning `pred` onto `gt` with the similarity transform
/// minimizing Σ‖s·R·p + t − q‖².
#[derive(Debug, Clone)]
pub struct Alignment {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub aligned: Vec<Vector3<f64>>,
    /// True when the point set was too degenerate (coincident or collinear)
    /// to determine a rotation; the identity transform was used instead.
    pub degenerate: bool,
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().sum::<Vector3<f64>>() / points.len() as f64
}

/// Closed-form least-squares similarity transform (scale, proper rotation,
/// translation) mapping `pred` onto `gt`. Degenerate configurations (fewer
/// than 3 points, coincident or collinear sets) fall back to the identity
/// transform with the `degenerate` flag set, so collapsed poses produced
/// early in training are scored rather than rejected.
pub fn umeyama_align(pred: &[Vector3<f64>], gt: &[Vector3<f64>]) -> Result<Alignment> {
    if pred.len() != gt.len() {
        return Err(Error::dimension("umeyama point count", gt.len(), pred.len()));
    }
    if pred.is_empty() {
        return Err(Error::invalid("umeyama", "empty point set"));
    }
    let identity = |degenerate: bool| Alignment {
        scale: 1.0,
        rotation: Matrix3::identity(),
        translation: Vector3::zeros(),
        aligned: pred.to_vec(),
        degenerate,
    };
    if pred.len() < 3 {
        return Ok(identity(true));
    }
    let n = pred.len() as f64;
    let mu_p = centroid(pred);
    let mu_q = centroid(gt);
    let var_p: f64 = pred.iter().map(|p| (p - mu_p).norm_squared()).sum::<f64>() / n;
    // Cross-covariance of gt against pred.
    let mut cov = Matrix3::zeros();
    for (p, q) in pred.iter().zip(gt) {
        cov += (q - mu_q) * (p - mu_p).transpose();
    }
    cov /= n;
    let mut svd = cov.svd(true, true);
    svd.sort_by_singular_values();
    let (u, v_t) = (svd.u.expect("svd u"), svd.v_t.expect("svd v_t"));
    let d = svd.singular_values;
    // Coincident points give var_p ≈ 0; collinear sets drop the covariance
    // rank below 2 and leave the rotation underdetermined.
    if var_p < 1e-12 || d[0] < 1e-15 || d[1] < 1e-9 * d[0] {
        return Ok(identity(true));
    }
    let det_sign = (u.determinant() * v_t.determinant()).signum();
    let mut s_diag = Vector3::new(1.0, 1.0, det_sign);
    let rotation = u * Matrix3::from_diagonal(&s_diag) * v_t;
    s_diag.component_mul_assign(&d);
    let scale = s_diag.sum() / var_p;
    let translation = mu_q - scale * (rotation * mu_p);
    let aligned = pred
        .iter()
        .map(|p| scale * (rotation * p) + translation)
        .collect();
    Ok(Alignment {
        scale,
        rotation,
        translation,
        aligned,
        degenerate: false,
    })
}

/// Mean Euclidean residual of an aligned set against its target.
pub fn mean_residual(aligned: &[Vector3<f64>], gt: &[Vector3<f64>]) -> f64 {
    aligned
        .iter()
        .zip(gt)
        .map(|(a, q)| (a - q).norm())
        .sum::<f64>()
        / gt.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use nalgebra::UnitQuaternion;

    fn random_points(n: usize, rng: &mut Rng) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|_| Vector3::new(rng.normal(), rng.normal(), rng.normal()))
            .collect()
    }

    #[test]
    fn identical_sets_give_identity_transform() {
        let mut rng = Rng::new(2).child("umeyama-id");
        let pts = random_points(8, &mut rng);
        let a = umeyama_align(&pts, &pts).unwrap();
        assert!(!a.degenerate);
        assert!((a.scale - 1.0).abs() < 1e-9);
        assert!((a.rotation - Matrix3::identity()).norm() < 1e-9);
        assert!(a.translation.norm() < 1e-9);
        assert!(mean_residual(&a.aligned, &pts) < 1e-12);
    }

    #[test]
    fn recovers_a_known_similarity_transform() {
        // gt = 2 · yaw90 · pred + (1, 0, 0): alignment must invert it.
        let mut rng = Rng::new(3).child("umeyama-known");
        let pred = random_points(10, &mut rng);
        let yaw90 = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2);
        let gt: Vec<Vector3<f64>> = pred
            .iter()
            .map(|p| 2.0 * (yaw90 * p) + Vector3::new(1.0, 0.0, 0.0))
            .collect();
        let a = umeyama_align(&pred, &gt).unwrap();
        assert!(!a.degenerate);
        assert!((a.scale - 2.0).abs() < 1e-9, "scale {}", a.scale);
        assert!((a.translation - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-9);
        assert!(mean_residual(&a.aligned, &gt) < 1e-9);
        assert!((a.rotation.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mirrored_target_keeps_rotation_proper() {
        let mut rng = Rng::new(4).child("umeyama-mirror");
        let pred = random_points(12, &mut rng);
        let gt: Vec<Vector3<f64>> = pred
            .iter()
            .map(|p| Vector3::new(-p.x, p.y, p.z))
            .collect();
        let a = umeyama_align(&pred, &gt).unwrap();
        assert!((a.rotation.determinant() - 1.0).abs() < 1e-9, "must stay a proper rotation");
        let residual = mean_residual(&a.aligned, &gt);
        assert!(residual > 1e-3, "no proper rotation can reach a mirror image");
        // Brute-force check that random proper similarity transforms do not
        // beat the returned optimum.
        let mut search = Rng::new(5).child("umeyama-search");
        for _ in 0..1000 {
            let q = UnitQuaternion::from_euler_angles(
                search.uniform_in(-3.1, 3.1),
                search.uniform_in(-3.1, 3.1),
                search.uniform_in(-3.1, 3.1),
            );
            let s = search.uniform_in(0.5, 2.0);
            let t = Vector3::new(search.normal(), search.normal(), search.normal());
            let candidate: Vec<Vector3<f64>> = pred.iter().map(|p| s * (q * p) + t).collect();
            assert!(mean_residual(&candidate, &gt) + 1e-12 >= residual);
        }
    }

    #[test]
    fn random_candidates_never_beat_the_optimum() {
        let mut rng = Rng::new(6).child("umeyama-opt");
        for case in 0..100 {
            let mut case_rng = rng.child_index(case);
            let pred = random_points(6, &mut case_rng);
            let gt = random_points(6, &mut case_rng);
            let a = umeyama_align(&pred, &gt).unwrap();
            let best = mean_residual(&a.aligned, &gt);
            for _ in 0..10 {
                let q = UnitQuaternion::from_euler_angles(
                    case_rng.uniform_in(-3.1, 3.1),
                    case_rng.uniform_in(-3.1, 3.1),
                    case_rng.uniform_in(-3.1, 3.1),
                );
                let s = case_rng.uniform_in(0.5, 2.0);
                let t = Vector3::new(case_rng.normal(), case_rng.normal(), case_rng.normal());
                let candidate: Vec<Vector3<f64>> = pred.iter().map(|p| s * (q * p) + t).collect();
                assert!(mean_residual(&candidate, &gt) + 1e-12 >= best);
            }
        }
    }

    #[test]
    fn degenerate_sets_fall_back_to_identity() {
        let coincident = vec![Vector3::new(1.0, 2.0, 3.0); 5];
        let mut rng = Rng::new(7).child("umeyama-degen");
        let gt = random_points(5, &mut rng);
        let a = umeyama_align(&coincident, &gt).unwrap();
        assert!(a.degenerate);
        assert_eq!(a.scale, 1.0);
        assert_eq!(a.aligned, coincident);

        let collinear: Vec<Vector3<f64>> =
            (0..5).map(|i| Vector3::new(i as f64, 0.0, 0.0)).collect();
        let a = umeyama_align(&collinear, &gt).unwrap();
        assert!(a.degenerate, "collinear pred must be flagged");

        let two = vec![Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0)];
        let a = umeyama_align(&two, &two.clone()).unwrap();
        assert!(a.degenerate, "fewer than 3 points cannot fix a rotation");

        assert!(umeyama_align(&collinear, &collinear[..3].to_vec()).is_err());
        assert!(umeyama_align(&[], &[]).is_err());
    }
}
