//! Penetration-based contact law with regularized Coulomb friction.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub use crate::geometry::{
    ellipsoid_ellipsoid_penetration, ellipsoid_plane_penetration, Ellipsoid, Penetration, Plane,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactLaw {
    /// N/m
    pub stiffness: f64,
    /// N·s/m
    pub damping: f64,
    pub friction_mu: f64,
    /// m/s
    pub friction_vel_eps: f64,
}

impl Default for ContactLaw {
    fn default() -> Self {
        Self { stiffness: 5.0e4, damping: 500.0, friction_mu: 0.5, friction_vel_eps: 1.0e-3 }
    }
}

impl ContactLaw {
    pub fn is_valid(&self) -> bool {
        self.stiffness > 0.0
            && self.damping >= 0.0
            && self.friction_mu >= 0.0
            && self.friction_vel_eps > 0.0
            && [self.stiffness, self.damping, self.friction_mu, self.friction_vel_eps].iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContactForce {
    pub normal: Vector3<f64>,
    pub friction: Vector3<f64>,
}

impl ContactForce {
    pub fn total(&self) -> Vector3<f64> {
        self.normal + self.friction
    }
}

/// Force on surface A for penetration `depth` > 0 along `normal` (pointing
/// from B towards A), penetration rate `depth_rate` and tangential sliding
/// velocity `v_t` of A relative to B.
pub fn contact_force(
    depth: f64,
    depth_rate: f64,
    normal: &Vector3<f64>,
    v_t: &Vector3<f64>,
    law: &ContactLaw,
) -> ContactForce {
    let fn_mag = (law.stiffness * depth + law.damping * depth_rate).max(0.0);
    let speed = v_t.norm();
    let friction = if speed > 0.0 {
        -law.friction_mu * fn_mag * v_t / (speed + law.friction_vel_eps)
    } else {
        Vector3::zeros()
    };
    ContactForce { normal: fn_mag * normal, friction }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn law() -> ContactLaw {
        ContactLaw { stiffness: 1.0e4, damping: 200.0, friction_mu: 0.5, friction_vel_eps: 1e-3 }
    }

    #[test]
    fn linear_normal_law() {
        let f = contact_force(0.01, 0.0, &Vector3::z(), &Vector3::zeros(), &law());
        assert_relative_eq!(f.normal.norm(), 100.0, epsilon = 1e-12);
        assert_eq!(f.friction, Vector3::zeros());
    }

    #[test]
    fn fast_separation_is_not_adhesive() {
        // k·δ + c·δ̇ = 100 − 200·1 < 0
        let f = contact_force(0.01, -1.0, &Vector3::z(), &Vector3::zeros(), &law());
        assert_eq!(f.normal, Vector3::zeros());
    }

    proptest! {
        #[test]
        fn friction_stays_inside_cone(
            depth in 1e-5f64..0.05, rate in -0.5f64..0.5,
            vx in -2.0f64..2.0, vy in -2.0f64..2.0,
        ) {
            let l = law();
            let f = contact_force(depth, rate, &Vector3::z(), &Vector3::new(vx, vy, 0.0), &l);
            prop_assert!(f.normal.z >= 0.0);
            let cone = l.friction_mu * f.normal.norm();
            prop_assert!(f.friction.norm() <= cone);
            if cone > 0.0 && (vx != 0.0 || vy != 0.0) {
                prop_assert!(f.friction.norm() < cone);
            }
        }
    }
}
