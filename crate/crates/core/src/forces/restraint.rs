//! Joint (Cardan) restraints and point restraints.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Parallel spring-dampers acting on each coordinate of one joint.
///
/// For spherical joints the coordinates are Cardan angles, so the resulting
/// torques are already generalized forces of the joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardanRestraint {
    pub joint: String,
    pub stiffness: Vec<f64>,
    pub damping: Vec<f64>,
    pub neutral: Vec<f64>,
}

impl CardanRestraint {
    pub fn new(joint: impl Into<String>, stiffness: Vec<f64>, damping: Vec<f64>) -> Self {
        let neutral = vec![0.0; stiffness.len()];
        Self { joint: joint.into(), stiffness, damping, neutral }
    }

    pub fn is_valid(&self) -> bool {
        let n = self.stiffness.len();
        self.damping.len() == n
            && self.neutral.len() == n
            && self.stiffness.iter().chain(&self.damping).all(|v| v.is_finite() && *v >= 0.0)
    }

    /// Stored elastic energy.
    pub fn energy(&self, angles: &[f64]) -> f64 {
        (0..self.stiffness.len()).map(|i| 0.5 * self.stiffness[i] * (angles[i] - self.neutral[i]).powi(2)).sum()
    }
}

/// `τᵢ = −kᵢ (θᵢ − θ₀ᵢ) − cᵢ θ̇ᵢ`
pub fn cardan_restraint_load(r: &CardanRestraint, angles: &[f64], rates: &[f64]) -> Vec<f64> {
    (0..r.stiffness.len())
        .map(|i| -r.stiffness[i] * (angles[i] - r.neutral[i]) - r.damping[i] * rates[i])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRestraintLaw {
    pub stiffness: f64,
    pub damping: f64,
}

/// Force on body A for the displacement `d = p_a − p_b` and its rate. Body B
/// receives the negated force.
pub fn point_restraint_force(law: &PointRestraintLaw, d: &Vector3<f64>, d_rate: &Vector3<f64>) -> Vector3<f64> {
    -law.stiffness * d - law.damping * d_rate
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn neutral_pose_gives_zero_torque() {
        let r = CardanRestraint { joint: "j".into(), stiffness: vec![10.0; 3], damping: vec![1.0; 3], neutral: vec![0.1, -0.2, 0.3] };
        assert_eq!(cardan_restraint_load(&r, &[0.1, -0.2, 0.3], &[0.0; 3]), vec![0.0; 3]);
    }

    #[test]
    fn linear_spring_and_damper() {
        let r = CardanRestraint::new("j", vec![10.0, 0.0, 0.0], vec![0.0; 3]);
        let tau = cardan_restraint_load(&r, &[0.1, 0.0, 0.0], &[0.0; 3]);
        assert_relative_eq!(tau[0], -1.0, epsilon = 1e-15);
        let r = CardanRestraint::new("j", vec![0.0; 3], vec![0.0, 5.0, 0.0]);
        let tau = cardan_restraint_load(&r, &[0.0; 3], &[0.0, 0.2, 0.0]);
        assert_eq!(tau, vec![0.0, -1.0, 0.0]);
    }

    #[test]
    fn point_restraint_static_law() {
        let law = PointRestraintLaw { stiffness: 1000.0, damping: 50.0 };
        assert_eq!(point_restraint_force(&law, &Vector3::zeros(), &Vector3::zeros()), Vector3::zeros());
        let f = point_restraint_force(&law, &Vector3::new(0.0, 0.0, 0.01), &Vector3::zeros());
        assert_relative_eq!(f, Vector3::new(0.0, 0.0, -10.0), epsilon = 1e-12);
    }

    #[test]
    fn negative_gains_are_invalid() {
        let mut r = CardanRestraint::new("j", vec![1.0; 3], vec![1.0; 3]);
        assert!(r.is_valid());
        r.damping[2] = -0.1;
        assert!(!r.is_valid());
    }
}
