//! Forward dynamics.
//!
//! [`forward_dynamics_aba`] is the O(n) articulated-body algorithm used by the
//! simulator. [`forward_dynamics_oracle`] solves the same equations through an
//! explicit mass matrix (composite-rigid-body) and inverse-dynamics bias; it
//! exists to cross-check the first.

use nalgebra::{DMatrix, DVector, Dyn, OMatrix, U6};

use super::kinematics::TreeKinematics;
use super::tree::KinematicTree;
use crate::error::{Error, Result};
use crate::spatial::{cross_force, SpatialMat, SpatialVec};

/// Known accelerations for a kinematically driven joint.
#[derive(Debug, Clone)]
pub struct PrescribedJoint {
    pub body: usize,
    pub accel: Vec<f64>,
}

fn wrench(ext: Option<&[SpatialVec]>, i: usize) -> SpatialVec {
    ext.map_or_else(SpatialVec::zeros, |e| e[i])
}

/// Generalized accelerations `u̇` for state `(q, u)`, generalized forces `tau`
/// and optional per-body external spatial forces (body coordinates).
///
/// Prescribed joints take their given accelerations; their entries in `tau`
/// are ignored and the returned vector contains the prescribed values.
pub fn forward_dynamics_aba(
    tree: &KinematicTree,
    q: &[f64],
    u: &[f64],
    tau: &[f64],
    ext: Option<&[SpatialVec]>,
    prescribed: &[PrescribedJoint],
) -> Result<DVector<f64>> {
    let kin = TreeKinematics::compute(tree, q, u)?;
    aba_with_kinematics(tree, &kin, tau, ext, prescribed)
}

pub fn aba_with_kinematics(
    tree: &KinematicTree,
    kin: &TreeKinematics,
    tau: &[f64],
    ext: Option<&[SpatialVec]>,
    prescribed: &[PrescribedJoint],
) -> Result<DVector<f64>> {
    aba_with_armature(tree, kin, tau, ext, prescribed, None)
}

/// ABA for `(M + diag(armature)) u̇ = τ − bias`.
///
/// With `armature = h·c` for linear joint dampers `c`, this is the
/// acceleration of a step that treats that damping implicitly.
pub fn aba_with_armature(
    tree: &KinematicTree,
    kin: &TreeKinematics,
    tau: &[f64],
    ext: Option<&[SpatialVec]>,
    prescribed: &[PrescribedJoint],
    armature: Option<&[f64]>,
) -> Result<DVector<f64>> {
    tree.check_len(tau.len())?;
    if let Some(a) = armature {
        tree.check_len(a.len())?;
    }
    let nb = tree.len();
    let mut given: Vec<Option<&[f64]>> = vec![None; nb];
    for p in prescribed {
        let n = tree.bodies()[p.body].dofs.len();
        if p.accel.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.accel.len() });
        }
        given[p.body] = Some(&p.accel);
    }

    let mut ia: Vec<SpatialMat> = Vec::with_capacity(nb);
    let mut pa: Vec<SpatialVec> = Vec::with_capacity(nb);
    for (i, body) in tree.bodies().iter().enumerate() {
        let v = &kin.bodies[i].v;
        let inertia = &body.spatial_inertia;
        ia.push(*inertia);
        pa.push(cross_force(v, &(inertia * v)) - wrench(ext, i));
    }

    // per-body (U, D⁻¹, u) kept for the outward pass
    let mut u_mat: Vec<OMatrix<f64, U6, Dyn>> = vec![OMatrix::<f64, U6, Dyn>::zeros(0); nb];
    let mut d_inv: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); nb];
    let mut u_vec: Vec<DVector<f64>> = vec![DVector::zeros(0); nb];

    for i in (0..nb).rev() {
        let body = &tree.bodies()[i];
        let bk = &kin.bodies[i];
        let n = bk.ndof;
        let s = bk.s.columns(0, n).into_owned();
        let (ia_i, pa_i) = match given[i] {
            Some(acc) => {
                let sq = &s * DVector::from_column_slice(acc);
                let a = bk.c + SpatialVec::from_column_slice(sq.as_slice());
                (ia[i], pa[i] + ia[i] * a)
            }
            None => {
                let um = ia[i] * &s;
                let mut d = s.transpose() * &um;
                if let Some(a) = armature {
                    for (k, dof) in body.dofs.clone().enumerate() {
                        d[(k, k)] += a[dof];
                    }
                }
                let dinv = d
                    .clone()
                    .cholesky()
                    .map(|c| c.inverse())
                    .ok_or_else(|| Error::SingularInertia(body.joint.name.clone()))?;
                let tau_i = DVector::from_column_slice(&tau[body.dofs.clone()]);
                let uu = tau_i - s.transpose() * pa[i];
                let ud = &um * &dinv;
                let ia_art = ia[i] - SpatialMat::from_column_slice((&ud * um.transpose()).as_slice());
                let corr = &ud * &uu;
                let pa_art = pa[i] + ia_art * bk.c + SpatialVec::from_column_slice(corr.as_slice());
                u_mat[i] = um;
                d_inv[i] = dinv;
                u_vec[i] = uu;
                (ia_art, pa_art)
            }
        };
        if let Some(p) = body.parent {
            let add_i = bk.x_up.inertia_to_parent(&ia_i);
            let add_p = bk.x_up.apply_force_transpose(&pa_i);
            ia[p] += add_i;
            pa[p] += add_p;
        }
    }

    let mut qdd = DVector::zeros(tree.dof());
    let mut acc: Vec<SpatialVec> = Vec::with_capacity(nb);
    for (i, body) in tree.bodies().iter().enumerate() {
        let bk = &kin.bodies[i];
        let n = bk.ndof;
        let mut a = bk.c;
        if let Some(p) = body.parent {
            a += bk.x_up.apply_motion(&acc[p]);
        }
        let qi = match given[i] {
            Some(g) => DVector::from_column_slice(g),
            None => &d_inv[i] * (&u_vec[i] - u_mat[i].transpose() * a),
        };
        let sq = bk.s.columns(0, n) * &qi;
        a += SpatialVec::from_column_slice(sq.as_slice());
        qdd.rows_mut(body.dofs.start, n).copy_from(&qi);
        acc.push(a);
    }
    Ok(qdd)
}

/// Joint-space mass matrix by the composite-rigid-body method.
pub fn mass_matrix(tree: &KinematicTree, kin: &TreeKinematics) -> DMatrix<f64> {
    let nb = tree.len();
    let mut ic: Vec<SpatialMat> = tree.bodies().iter().map(|b| b.spatial_inertia).collect();
    for i in (0..nb).rev() {
        if let Some(p) = tree.bodies()[i].parent {
            let add = kin.bodies[i].x_up.inertia_to_parent(&ic[i]);
            ic[p] += add;
        }
    }
    let mut h = DMatrix::zeros(tree.dof(), tree.dof());
    for i in 0..nb {
        let bi = &tree.bodies()[i];
        let si = kin.bodies[i].s.columns(0, kin.bodies[i].ndof).into_owned();
        let mut f = ic[i] * &si;
        let hii = si.transpose() * &f;
        h.view_mut((bi.dofs.start, bi.dofs.start), (hii.nrows(), hii.ncols())).copy_from(&hii);
        let mut j = i;
        while let Some(pj) = tree.bodies()[j].parent {
            f = kin.bodies[j].x_up.motion_matrix().transpose() * f;
            j = pj;
            let bj = &tree.bodies()[j];
            let sj = kin.bodies[j].s.columns(0, kin.bodies[j].ndof);
            let hji = sj.transpose() * &f;
            h.view_mut((bj.dofs.start, bi.dofs.start), (hji.nrows(), hji.ncols())).copy_from(&hji);
            h.view_mut((bi.dofs.start, bj.dofs.start), (hji.ncols(), hji.nrows()))
                .copy_from(&hji.transpose());
        }
    }
    h
}

/// Recursive Newton-Euler inverse dynamics: generalized forces required for
/// accelerations `qdd` in the presence of external spatial forces.
pub fn inverse_dynamics(
    tree: &KinematicTree,
    kin: &TreeKinematics,
    qdd: &[f64],
    ext: Option<&[SpatialVec]>,
) -> DVector<f64> {
    let nb = tree.len();
    let mut acc: Vec<SpatialVec> = Vec::with_capacity(nb);
    let mut f: Vec<SpatialVec> = Vec::with_capacity(nb);
    for (i, body) in tree.bodies().iter().enumerate() {
        let bk = &kin.bodies[i];
        let qi = DVector::from_column_slice(&qdd[body.dofs.clone()]);
        let sq = bk.s.columns(0, bk.ndof) * qi;
        let mut a = bk.c + SpatialVec::from_column_slice(sq.as_slice());
        if let Some(p) = body.parent {
            a += bk.x_up.apply_motion(&acc[p]);
        }
        let inertia = &body.spatial_inertia;
        f.push(inertia * a + cross_force(&bk.v, &(inertia * bk.v)) - wrench(ext, i));
        acc.push(a);
    }
    let mut tau = DVector::zeros(tree.dof());
    for i in (0..nb).rev() {
        let body = &tree.bodies()[i];
        let bk = &kin.bodies[i];
        let proj = bk.s.columns(0, bk.ndof).transpose() * f[i];
        tau.rows_mut(body.dofs.start, bk.ndof).copy_from(&proj);
        if let Some(p) = body.parent {
            let up = bk.x_up.apply_force_transpose(&f[i]);
            f[p] += up;
        }
    }
    tau
}

/// Reference forward dynamics `u̇ = M(q)⁻¹ (τ − bias(q, u))`.
pub fn forward_dynamics_oracle(
    tree: &KinematicTree,
    q: &[f64],
    u: &[f64],
    tau: &[f64],
    ext: Option<&[SpatialVec]>,
) -> Result<DVector<f64>> {
    tree.check_len(tau.len())?;
    let kin = TreeKinematics::compute(tree, q, u)?;
    let m = mass_matrix(tree, &kin);
    let bias = inverse_dynamics(tree, &kin, &vec![0.0; tree.dof()], ext);
    let rhs = DVector::from_column_slice(tau) - bias;
    let chol = m.cholesky().ok_or(Error::MassMatrixNotPd)?;
    Ok(chol.solve(&rhs))
}
