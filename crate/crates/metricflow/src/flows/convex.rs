//! Closed convex bodies with closed-form metric projections.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// A closed convex subset of a finite-dimensional Euclidean space.
#[derive(Clone, Debug)]
pub enum ConvexBody {
    Ball {
        center: DVector<f64>,
        radius: f64,
    },
    Box {
        lower: DVector<f64>,
        upper: DVector<f64>,
    },
    /// `{ x : <normal, x> <= offset }`.
    Halfspace {
        normal: DVector<f64>,
        offset: f64,
    },
}

impl ConvexBody {
    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(ConvexBody::Ball { center, radius })
    }

    pub fn axis_box(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidConfig(format!(
                "box bounds have dimensions {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidConfig(
                "box needs lower < upper in every coordinate".into(),
            ));
        }
        Ok(ConvexBody::Box { lower, upper })
    }

    pub fn halfspace(normal: DVector<f64>, offset: f64) -> Result<Self> {
        if normal.norm() == 0.0 || !offset.is_finite() {
            return Err(Error::InvalidConfig(
                "halfspace needs a nonzero normal and finite offset".into(),
            ));
        }
        Ok(ConvexBody::Halfspace { normal, offset })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Ball { center, .. } => center.len(),
            ConvexBody::Box { lower, .. } => lower.len(),
            ConvexBody::Halfspace { normal, .. } => normal.len(),
        }
    }

    /// Minimal-distance projection onto the body.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::SpaceMismatch(format!(
                "point dimension {} vs body dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(match self {
            ConvexBody::Ball { center, radius } => {
                let e = x - center;
                let r = e.norm();
                if r <= *radius {
                    x.clone()
                } else {
                    center + e * (*radius / r)
                }
            }
            ConvexBody::Box { lower, upper } => DVector::from_iterator(
                x.len(),
                x.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(v, (l, u))| v.max(*l).min(*u)),
            ),
            ConvexBody::Halfspace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    x - normal * (excess / normal.norm_squared())
                }
            }
        })
    }

    /// Membership up to `tol` in the projection metric.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        let p = self.project(x)?;
        Ok((x - p).norm() <= tol)
    }
}

/// The left-hand side of the projection commutation estimate:
/// `|| P(P(u + tau v) + tau2 v) - P(u + (tau + tau2) v) ||`.
///
/// For convex bodies this is bounded by `K ||v|| tau tau2` with a
/// body-dependent curvature constant `K`; flat boundaries give exactly 0.
pub fn projection_commutation_defect(
    body: &ConvexBody,
    u: &DVector<f64>,
    v: &DVector<f64>,
    tau: f64,
    tau2: f64,
) -> Result<f64> {
    if !(tau >= 0.0) || !(tau2 >= 0.0) {
        return Err(Error::InvalidRange(format!(
            "defect needs nonnegative step lengths, got {tau}, {tau2}"
        )));
    }
    let first = body.project(&(u + v * tau))?;
    let chained = body.project(&(&first + v * tau2))?;
    let direct = body.project(&(u + v * (tau + tau2)))?;
    Ok((chained - direct).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vec2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    fn unit_disk() -> ConvexBody {
        ConvexBody::ball(vec2(0.0, 0.0), 1.0).unwrap()
    }

    fn bodies() -> Vec<ConvexBody> {
        vec![
            unit_disk(),
            ConvexBody::axis_box(vec2(0.0, 0.0), vec2(1.0, 1.0)).unwrap(),
            ConvexBody::halfspace(vec2(0.0, 1.0), 0.625).unwrap(),
        ]
    }

    #[test]
    fn interior_points_are_fixed() {
        for body in bodies() {
            let x = vec2(0.25, 0.25);
            assert_eq!(body.project(&x).unwrap(), x);
            assert!(body.contains(&x, 0.0).unwrap());
        }
    }

    #[test]
    fn ball_projects_radially() {
        let p = unit_disk().project(&vec2(2.0, 0.0)).unwrap();
        assert!((p - vec2(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn box_clamps() {
        let body = ConvexBody::axis_box(vec2(0.0, 0.0), vec2(1.0, 1.0)).unwrap();
        let p = body.project(&vec2(1.5, -0.2)).unwrap();
        assert_eq!(p, vec2(1.0, 0.0));
    }

    #[test]
    fn halfspace_removes_excess_exactly() {
        let body = ConvexBody::halfspace(vec2(0.0, 1.0), 0.625).unwrap();
        let p = body.project(&vec2(0.5, 1.0)).unwrap();
        assert_eq!(p, vec2(0.5, 0.625));
    }

    #[test]
    fn projections_are_idempotent_and_non_expansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for body in bodies() {
            for _ in 0..300 {
                let x = vec2(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                let y = vec2(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                let px = body.project(&x).unwrap();
                let py = body.project(&y).unwrap();
                let ppx = body.project(&px).unwrap();
                assert!((&ppx - &px).norm() <= 1e-15);
                assert!((&px - &py).norm() <= (&x - &y).norm() + 1e-12);
                assert!(body.contains(&px, 1e-12).unwrap());
            }
        }
    }

    #[test]
    fn defect_vanishes_when_no_projection_happens() {
        let body = unit_disk();
        let d = projection_commutation_defect(
            &body,
            &vec2(0.1, 0.0),
            &vec2(0.0, 1.0),
            0.1,
            0.2,
        )
        .unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn halfspace_defect_is_exactly_zero_on_dyadic_inputs() {
        let body = ConvexBody::halfspace(vec2(0.0, 1.0), 0.625).unwrap();
        let u = vec2(0.0, 0.5);
        let v = vec2(0.0, 1.0);
        for tau in [0.125, 0.25, 0.5] {
            for tau2 in [0.125, 0.25, 0.5] {
                let d = projection_commutation_defect(&body, &u, &v, tau, tau2).unwrap();
                assert_eq!(d, 0.0, "tau = {tau}, tau2 = {tau2}");
            }
        }
    }

    #[test]
    fn disk_defect_is_positive_for_mixed_push() {
        let body = unit_disk();
        let u = vec2(1.0, 0.0);
        let v = vec2(1.0, 1.0).normalize();
        let d = projection_commutation_defect(&body, &u, &v, 0.1, 0.1).unwrap();
        assert!(d > 0.0);
        // Order tau * tau2 with a modest constant; the fitted K is ~0.45.
        assert!(d <= 1.0 * 0.1 * 0.1);
    }

    #[test]
    fn malformed_bodies_are_rejected() {
        assert!(ConvexBody::ball(vec2(0.0, 0.0), 0.0).is_err());
        assert!(ConvexBody::axis_box(vec2(0.0, 1.0), vec2(1.0, 0.5)).is_err());
        assert!(ConvexBody::halfspace(vec2(0.0, 0.0), 1.0).is_err());
    }
}
