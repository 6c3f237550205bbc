//! One-copy distillability witnesses.
//!
//! A witness certifies that a bipartite state is distillable, which places
//! it in D or M. Only single-copy tests are attempted.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::{self, McDetection, Side};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::qstate::{partial_transpose, DensityOp};
use crate::sampling::random_unitary;

/// Projections with trace at or below this are skipped.
pub const PROJECTION_TRACE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WitnessKind {
    ReductionViolation,
    RankDeficit,
    MaximallyCorrelated,
    Projection2x2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rotation {
    pub seed: u64,
    pub index: usize,
}

impl Rotation {
    /// The local unitaries `(U_A, U_B)` for this rotation.
    pub fn unitaries(&self, da: usize, db: usize) -> (CMatrix, CMatrix) {
        let mixed = self
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(self.index as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(mixed);
        (random_unitary(da, &mut rng), random_unitary(db, &mut rng))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WitnessData {
    Reduction {
        side: Side,
        min_eigenvalue: f64,
    },
    RankDeficit {
        rank: usize,
        local_rank: usize,
    },
    MaximallyCorrelated {
        max_offdiagonal: f64,
    },
    Projection {
        a_pair: (usize, usize),
        b_pair: (usize, usize),
        rotation: Option<Rotation>,
        /// The normalized two-qubit block.
        projected: CMatrix,
        min_pt_eigenvalue: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillWitness {
    pub kind: WitnessKind,
    pub data: WitnessData,
    pub verified: bool,
}

impl DistillWitness {
    pub fn summary(&self) -> String {
        match &self.data {
            WitnessData::Reduction { side, min_eigenvalue } => {
                format!("reduction violated on side {side:?} (min eigenvalue {min_eigenvalue:.3e})")
            }
            WitnessData::RankDeficit { rank, local_rank } => {
                format!("rank {rank} below local rank {local_rank}")
            }
            WitnessData::MaximallyCorrelated { max_offdiagonal } => {
                format!("entangled maximally correlated form (off-diagonal {max_offdiagonal:.3e})")
            }
            WitnessData::Projection {
                a_pair,
                b_pair,
                rotation,
                min_pt_eigenvalue,
                ..
            } => {
                let rot = rotation.map_or(String::new(), |r| format!(" after rotation {} (seed {})", r.index, r.seed));
                format!(
                    "projection onto A{{{},{}}} x B{{{},{}}}{rot} is NPT (min {min_pt_eigenvalue:.3e})",
                    a_pair.0, a_pair.1, b_pair.0, b_pair.1
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Budget {
    BasisPairsOnly,
    PlusRandomRotations { rotations: usize, seed: u64 },
}

fn dims(rho: &DensityOp) -> Result<(usize, usize)> {
    match rho.dims() {
        [a, b] => Ok((*a, *b)),
        other => Err(Error::InvalidParties(format!("expected a bipartite operator, got dims {other:?}"))),
    }
}

fn reduction_witness(rho: &DensityOp, tol: f64) -> Result<Option<DistillWitness>> {
    let (left, right) = criteria::reduction_operators(rho)?;
    for (side, op) in [(Side::A, left), (Side::B, right)] {
        let chk = linalg::is_psd(&op, tol)?;
        if !chk.is_psd {
            return Ok(Some(DistillWitness {
                kind: WitnessKind::ReductionViolation,
                data: WitnessData::Reduction {
                    side,
                    min_eigenvalue: chk.min_eigenvalue,
                },
                verified: false,
            }));
        }
    }
    Ok(None)
}

fn rank_witness(rho: &DensityOp, tol: f64) -> Result<Option<DistillWitness>> {
    let rank = rho.rank(tol)?;
    let local = rho.partial_trace(&[0])?.rank(tol)?.max(rho.partial_trace(&[1])?.rank(tol)?);
    Ok((rank < local).then(|| DistillWitness {
        kind: WitnessKind::RankDeficit,
        data: WitnessData::RankDeficit { rank, local_rank: local },
        verified: false,
    }))
}

fn mc_witness(rho: &DensityOp, tol: f64) -> Result<Option<DistillWitness>> {
    Ok(match criteria::detect_max_correlated(rho, tol)? {
        McDetection::Found(f) if !f.is_diagonal() => Some(DistillWitness {
            kind: WitnessKind::MaximallyCorrelated,
            data: WitnessData::MaximallyCorrelated {
                max_offdiagonal: f.max_offdiagonal(),
            },
            verified: false,
        }),
        _ => None,
    })
}

/// Normalized `(P ⊗ Q) ρ (P ⊗ Q)` block on the two chosen basis pairs, or
/// `None` when the projection is (numerically) null.
pub fn project_pairs(m: &CMatrix, db: usize, a_pair: (usize, usize), b_pair: (usize, usize)) -> Option<CMatrix> {
    let idx = [
        a_pair.0 * db + b_pair.0,
        a_pair.0 * db + b_pair.1,
        a_pair.1 * db + b_pair.0,
        a_pair.1 * db + b_pair.1,
    ];
    let block = CMatrix::from_fn(4, 4, |i, j| m[(idx[i], idx[j])]);
    let tr = block.trace().re;
    (tr > PROJECTION_TRACE_FLOOR).then(|| block.scale_real(1.0 / tr))
}

fn two_qubit_min_pt(block: &CMatrix) -> Result<f64> {
    let op = DensityOp::unchecked(vec![2, 2], block.clone())?;
    let pt = partial_transpose(&op, &[1])?;
    Ok(linalg::eig_hermitian(&pt.hermitian_part())?.min_eigenvalue())
}

fn pairs(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            out.push((i, j));
        }
    }
    out
}

fn rotated(rho: &DensityOp, rot: Rotation) -> Result<CMatrix> {
    let (da, db) = dims(rho)?;
    let (ua, ub) = rot.unitaries(da, db);
    Ok(rho.local_sandwich(&ua, &ub))
}

fn projection_witnesses(
    m: &CMatrix,
    da: usize,
    db: usize,
    rotation: Option<Rotation>,
    tol: f64,
    first_only: bool,
) -> Result<Vec<DistillWitness>> {
    let mut out = Vec::new();
    for a_pair in pairs(da) {
        for b_pair in pairs(db) {
            let Some(block) = project_pairs(m, db, a_pair, b_pair) else {
                continue;
            };
            let min = two_qubit_min_pt(&block)?;
            if min < -tol {
                out.push(DistillWitness {
                    kind: WitnessKind::Projection2x2,
                    data: WitnessData::Projection {
                        a_pair,
                        b_pair,
                        rotation,
                        projected: block,
                        min_pt_eigenvalue: min,
                    },
                    verified: false,
                });
                if first_only {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

fn search(rho: &DensityOp, budget: Budget, tol: f64, first_only: bool) -> Result<Vec<DistillWitness>> {
    let (da, db) = dims(rho)?;
    let mut found = Vec::new();
    for w in [reduction_witness(rho, tol)?, rank_witness(rho, tol)?, mc_witness(rho, tol)?]
        .into_iter()
        .flatten()
    {
        found.push(w);
        if first_only {
            return Ok(found);
        }
    }
    found.extend(projection_witnesses(rho.matrix(), da, db, None, tol, first_only)?);
    if first_only && !found.is_empty() {
        return Ok(found);
    }
    if let Budget::PlusRandomRotations { rotations, seed } = budget {
        // Rotations are independent; evaluate them in parallel and keep the
        // lowest index so the outcome does not depend on scheduling.
        use rayon::prelude::*;
        let per_rotation: Vec<Result<Vec<DistillWitness>>> = (0..rotations)
            .into_par_iter()
            .map(|index| {
                let rot = Rotation { seed, index };
                let m = rotated(rho, rot)?;
                projection_witnesses(&m, da, db, Some(rot), tol, first_only)
            })
            .collect();
        for ws in per_rotation {
            let ws = ws?;
            if first_only && !ws.is_empty() {
                found.extend(ws);
                return Ok(found);
            }
            found.extend(ws);
        }
    }
    Ok(found)
}

/// Tries reduction violation, rank deficit, an entangled MC form and then
/// 2×2 basis-pair projections (optionally after seeded local rotations).
/// The first hit, re-verified, is returned.
pub fn witness_search(rho: &DensityOp, budget: Budget, tol: f64) -> Result<Option<DistillWitness>> {
    let mut found = search(rho, budget, tol, true)?;
    match found.pop() {
        Some(mut w) => {
            w.verified = verify_witness(rho, &w, tol)?;
            Ok(w.verified.then_some(w))
        }
        None => Ok(None),
    }
}

/// All witnesses the budget reaches, each re-verified.
pub fn collect_witnesses(rho: &DensityOp, budget: Budget, tol: f64) -> Result<Vec<DistillWitness>> {
    let mut all = search(rho, budget, tol, false)?;
    for w in &mut all {
        w.verified = verify_witness(rho, w, tol)?;
    }
    Ok(all)
}

/// Recomputes the witness condition from scratch.
pub fn verify_witness(rho: &DensityOp, w: &DistillWitness, tol: f64) -> Result<bool> {
    let (da, db) = dims(rho)?;
    Ok(match &w.data {
        WitnessData::Reduction { side, .. } => {
            let (left, right) = criteria::reduction_operators(rho)?;
            let op = match side {
                Side::A => left,
                Side::B => right,
            };
            !linalg::is_psd(&op, tol)?.is_psd
        }
        WitnessData::RankDeficit { .. } => rank_witness(rho, tol)?.is_some(),
        WitnessData::MaximallyCorrelated { .. } => mc_witness(rho, tol)?.is_some(),
        WitnessData::Projection {
            a_pair,
            b_pair,
            rotation,
            projected,
            ..
        } => {
            let in_range = |(i, j): (usize, usize), d: usize| i < j && j < d;
            if !in_range(*a_pair, da) || !in_range(*b_pair, db) {
                return Err(Error::DimensionMismatch(format!(
                    "projector pairs {a_pair:?}, {b_pair:?} do not fit {da}x{db}"
                )));
            }
            let m = match rotation {
                Some(rot) => rotated(rho, *rot)?,
                None => rho.matrix().clone(),
            };
            match project_pairs(&m, db, *a_pair, *b_pair) {
                Some(block) => block.distance(projected) <= 1e-8 && two_qubit_min_pt(&block)? < -tol,
                None => false,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{r, C64, DEFAULT_TOL};
    use crate::qstate::{reduce, PureState};

    fn classical_pair() -> DensityOp {
        DensityOp::new(vec![2, 2], CMatrix::from_real_diag(&[0.5, 0.0, 0.0, 0.5]), DEFAULT_TOL).unwrap()
    }

    /// Symmetric part of the order-3 `DDD` example on `r` levels (unnormalized
    /// until `from_terms`).
    fn psi_r(rdim: usize) -> PureState {
        let mut terms: Vec<(Vec<usize>, C64)> = Vec::new();
        let w = (1.0 / (2.0 * rdim as f64)).sqrt();
        for p in [[2, 0, 1], [0, 1, 2], [1, 2, 0], [1, 0, 2], [0, 2, 1], [2, 1, 0]] {
            terms.push((p.to_vec(), r(w)));
        }
        for j in 3..rdim {
            terms.push((vec![j, j, j], r(1.0 / (rdim as f64).sqrt())));
        }
        let refs: Vec<(&[usize], C64)> = terms.iter().map(|(i, a)| (i.as_slice(), *a)).collect();
        PureState::from_terms(vec![rdim; 3], &refs).unwrap()
    }

    #[test]
    fn bell_block_from_symmetric_state() {
        let rho = reduce(&psi_r(4), &[0, 1]).unwrap();
        assert_eq!(criteria::check_reduction(&rho, DEFAULT_TOL).unwrap().status, criteria::Status::Holds);
        let w = witness_search(&rho, Budget::BasisPairsOnly, DEFAULT_TOL).unwrap().unwrap();
        assert_eq!(w.kind, WitnessKind::Projection2x2);
        let WitnessData::Projection { a_pair, b_pair, projected, .. } = &w.data else {
            panic!()
        };
        assert_eq!((*a_pair, *b_pair), ((0, 1), (0, 1)));
        let h = r(0.5f64.sqrt());
        let bell = CMatrix::projector(&[r(0.0), h, h, r(0.0)]);
        assert!(projected.distance(&bell) < 1e-9);
        assert!(verify_witness(&rho, &w, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn separable_state_has_no_witness() {
        let rho = classical_pair();
        assert!(witness_search(&rho, Budget::PlusRandomRotations { rotations: 16, seed: 1 }, DEFAULT_TOL)
            .unwrap()
            .is_none());
        let fake = DistillWitness {
            kind: WitnessKind::Projection2x2,
            data: WitnessData::Projection {
                a_pair: (0, 1),
                b_pair: (0, 1),
                rotation: None,
                projected: CMatrix::identity(4).scale_real(0.25),
                min_pt_eigenvalue: -0.5,
            },
            verified: true,
        };
        assert!(!verify_witness(&rho, &fake, DEFAULT_TOL).unwrap());
        let bad = DistillWitness {
            data: WitnessData::Projection {
                a_pair: (0, 2),
                b_pair: (0, 1),
                rotation: None,
                projected: CMatrix::identity(4),
                min_pt_eigenvalue: -0.5,
            },
            ..fake
        };
        assert!(verify_witness(&rho, &bad, DEFAULT_TOL).is_err());
    }

    #[test]
    fn rank_two_mixture_on_three_by_three() {
        // Mixture of two entangled pure states; rank 2 < local rank 3.
        let s = r(0.5f64.sqrt());
        let z = r(0.0);
        let v1 = vec![s, z, z, z, s, z, z, z, z]; // (|00⟩+|11⟩)/√2
        let v2 = vec![z, z, z, z, z, s, z, s, z]; // (|12⟩+|21⟩)/√2
        let m = &CMatrix::projector(&v1).scale_real(0.5) + &CMatrix::projector(&v2).scale_real(0.5);
        let rho = DensityOp::new(vec![3, 3], m, DEFAULT_TOL).unwrap();
        assert_eq!(rho.rank(DEFAULT_TOL).unwrap(), 2);
        let all = collect_witnesses(&rho, Budget::BasisPairsOnly, DEFAULT_TOL).unwrap();
        let rd = all.iter().find(|w| w.kind == WitnessKind::RankDeficit).expect("rank deficit witness");
        assert!(rd.verified);
        assert!(verify_witness(&rho, rd, DEFAULT_TOL).unwrap());
        // The search itself stops at the cheaper reduction test.
        let first = witness_search(&rho, Budget::BasisPairsOnly, DEFAULT_TOL).unwrap().unwrap();
        assert_eq!(first.kind, WitnessKind::ReductionViolation);
    }

    #[test]
    fn basis_pair_search_is_deterministic() {
        let rho = reduce(&psi_r(5), &[1, 2]).unwrap();
        let a = witness_search(&rho, Budget::BasisPairsOnly, DEFAULT_TOL).unwrap();
        let b = witness_search(&rho, Budget::BasisPairsOnly, DEFAULT_TOL).unwrap();
        assert_eq!(a, b);
        assert!(a.is_some());
    }

    #[test]
    fn rotated_witness_replays() {
        let rho = reduce(&psi_r(4), &[0, 1]).unwrap();
        let all = collect_witnesses(&rho, Budget::PlusRandomRotations { rotations: 4, seed: 3 }, DEFAULT_TOL).unwrap();
        assert!(all.iter().all(|w| w.verified));
    }
}
