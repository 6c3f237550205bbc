//! Exact recovery through the Petz map and the separable decomposition it
//! induces on the other pair.
//!
//! Pipeline, for `|Ψ⟩_ABC` with `ρ_BC = Σ p_i |φ_i^B φ_i^C⟩⟨·|`:
//! extend to `ρ_BCD` with an orthonormal flag on D, build the recovery map
//! `Λ_C(σ) = ρ_CD^{1/2} (ρ_C^{-1/2} σ ρ_C^{-1/2} ⊗ I_D) ρ_CD^{1/2}` as a
//! Stinespring isometry `U: C → C⊗D⊗E`, apply it to `|Ψ⟩` and read off
//! `ρ_AB = Σ p_i |φ_i^B⟩⟨φ_i^B| ⊗ σ_i^A` branch by branch.

use serde::{Deserialize, Serialize};

use crate::criteria::EQUALITY_TOL;
use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix, C64};
use crate::qstate::{entropy, reduce, DensityOp, PureState};

const WEIGHT_SUM_TOL: f64 = 1e-9;
const REBUILD_TOL: f64 = 1e-8;
const MARGINAL_TOL: f64 = 1e-8;
const DEGENERACY_GAP: f64 = 1e-6;

/// `Σ_k w_k ⊗_j |v_{k,j}⟩⟨v_{k,j}|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableDecomposition {
    pub dims: Vec<usize>,
    pub weights: Vec<f64>,
    /// `factors[k][j]` is the unit vector of term `k` on party `j`.
    pub factors: Vec<Vec<Vec<C64>>>,
}

impl SeparableDecomposition {
    pub fn new(dims: Vec<usize>, weights: Vec<f64>, factors: Vec<Vec<Vec<C64>>>) -> Result<Self> {
        let dec = Self { dims, weights, factors };
        dec.validate()?;
        Ok(dec)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() || self.weights.len() != self.factors.len() {
            return Err(Error::InvalidParameters("decomposition needs one factor list per weight".into()));
        }
        if self.weights.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
            return Err(Error::InvalidParameters("decomposition weights must be positive".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParameters(format!("decomposition weights sum to {sum}")));
        }
        for (k, term) in self.factors.iter().enumerate() {
            if term.len() != self.dims.len() || term.iter().zip(&self.dims).any(|(v, &d)| v.len() != d) {
                return Err(Error::DimensionMismatch(format!("term {k} does not match dims {:?}", self.dims)));
            }
            if let Some(v) = term.iter().find(|v| (linalg::norm(v) - 1.0).abs() > 1e-9) {
                return Err(Error::NotNormalized(linalg::norm(v)));
            }
        }
        Ok(())
    }

    pub fn product_vector(&self, k: usize) -> Vec<C64> {
        self.factors[k]
            .iter()
            .fold(vec![r(1.0)], |acc, v| linalg::kron_vec(&acc, v))
    }

    pub fn rebuild(&self) -> CMatrix {
        let n: usize = self.dims.iter().product();
        let mut m = CMatrix::zeros(n, n);
        for (k, &w) in self.weights.iter().enumerate() {
            m = &m + &CMatrix::projector(&self.product_vector(k)).scale_real(w);
        }
        m
    }

    /// Frobenius distance between the mixture and `rho`.
    pub fn rebuild_error(&self, rho: &DensityOp) -> f64 {
        self.rebuild().distance(rho.matrix())
    }
}

fn max_offdiagonal(m: &CMatrix) -> f64 {
    let n = m.rows();
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                best = best.max(m[(i, j)].norm());
            }
        }
    }
    best
}

/// Decomposition of a bipartite operator that is diagonal in a product
/// basis: the computational one, or the eigenbases of the marginals when
/// their spectra are non-degenerate on the support.
pub fn find_classical_decomposition(rho: &DensityOp, tol: f64) -> Result<Option<SeparableDecomposition>> {
    let dims = rho.dims().to_vec();
    let mut bases: Vec<Vec<CMatrix>> = vec![dims.iter().map(|&d| CMatrix::identity(d)).collect()];
    let mut eigen = Vec::with_capacity(dims.len());
    for j in 0..dims.len() {
        let es = rho.partial_trace(&[j])?.eigen()?;
        let cut = es.rank_cutoff(tol);
        let support: Vec<f64> = es.eigenvalues.iter().copied().filter(|&l| l > cut).collect();
        if support.windows(2).any(|w| w[1] - w[0] <= DEGENERACY_GAP) {
            break;
        }
        eigen.push(es.vectors);
    }
    if eigen.len() == dims.len() {
        bases.push(eigen);
    }
    for basis in bases {
        let u = basis.iter().fold(CMatrix::identity(1), |acc, b| acc.kron(b));
        let rotated = rho.matrix().conjugate_by(&u.adjoint());
        if max_offdiagonal(&rotated) > REBUILD_TOL {
            continue;
        }
        let cut = tol * rho.matrix().max_abs().max(1.0);
        let mut weights = Vec::new();
        let mut factors = Vec::new();
        for (flat, z) in rotated.diagonal().into_iter().enumerate() {
            if z.re <= cut {
                continue;
            }
            let idx = crate::qstate::unflatten(flat, &dims);
            weights.push(z.re);
            factors.push(idx.iter().zip(&basis).map(|(&i, b)| b.column(i)).collect());
        }
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let dec = SeparableDecomposition::new(dims.clone(), weights, factors)?;
        if dec.rebuild_error(rho) <= REBUILD_TOL {
            return Ok(Some(dec));
        }
    }
    Ok(None)
}

/// Decomposition of `ρ_xy` from a basis of the third party in which every
/// conditional state of `|Ψ⟩` is a product. Tries the computational basis
/// and the eigenbasis of `ρ_z`.
pub fn find_conditional_decomposition(psi: &PureState, x: usize, y: usize, tol: f64) -> Result<Option<SeparableDecomposition>> {
    if psi.num_parties() != 3 || x == y || x > 2 || y > 2 {
        return Err(Error::InvalidParties(format!("pair ({x}, {y}) of a tripartite state expected")));
    }
    let z = 3 - x - y;
    let moved = psi.permute_parties(&[x, y, z])?;
    let (dx, dy, dz) = (moved.dims()[0], moved.dims()[1], moved.dims()[2]);
    let rho_xy = reduce(&moved, &[0, 1])?;
    let eig_z = reduce(&moved, &[2])?.eigen()?;
    for basis in [CMatrix::identity(dz), eig_z.vectors] {
        let mut weights = Vec::new();
        let mut factors = Vec::new();
        let mut ok = true;
        for k in 0..dz {
            let e = basis.column(k);
            let cond: Vec<C64> = (0..dx * dy)
                .map(|ab| (0..dz).map(|t| e[t].conj() * moved.amps()[ab * dz + t]).sum())
                .collect();
            let w = linalg::norm(&cond).powi(2);
            if w <= tol {
                continue;
            }
            let m = CMatrix::new(dx, dy, cond)?;
            let es = linalg::eig_hermitian(&m.matmul(&m.adjoint()))?;
            if es.rank(tol) != 1 {
                ok = false;
                break;
            }
            let a = es.vector(dx - 1);
            let b: Vec<C64> = m.adjoint().mat_vec(&a).into_iter().map(|z| z.conj()).collect();
            weights.push(w);
            factors.push(vec![a, linalg::normalized(&b)]);
        }
        if !ok || weights.is_empty() {
            continue;
        }
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let dec = SeparableDecomposition::new(vec![dx, dy], weights, factors)?;
        if dec.rebuild_error(&rho_xy) <= REBUILD_TOL {
            return Ok(Some(dec));
        }
    }
    Ok(None)
}

/// `ρ_BCD = Σ p_i |φ_i^B, φ_i^C, i⟩⟨·|` with D the term index.
pub fn build_extension(dec: &SeparableDecomposition) -> Result<DensityOp> {
    dec.validate()?;
    if dec.dims.len() != 2 {
        return Err(Error::InvalidParties("extension needs a bipartite decomposition".into()));
    }
    let k = dec.len();
    let n = dec.dims[0] * dec.dims[1] * k;
    let mut m = CMatrix::zeros(n, n);
    for (i, &w) in dec.weights.iter().enumerate() {
        let v = linalg::kron_vec(&dec.product_vector(i), &linalg::basis_vector(k, i));
        m = &m + &CMatrix::projector(&v).scale_real(w);
    }
    DensityOp::new(vec![dec.dims[0], dec.dims[1], k], m, MARGINAL_TOL)
}

/// A channel `C → C⊗D` stored as its Stinespring isometry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryChannel {
    pub dim_c: usize,
    pub dim_d: usize,
    pub dim_e: usize,
    /// Rows ordered `(c, d, e)`, environment fastest.
    pub isometry: CMatrix,
}

impl RecoveryChannel {
    /// Kraus operator for environment index `e`, shape `(dim_c·dim_d) × dim_c`.
    pub fn kraus(&self, e: usize) -> CMatrix {
        let out = self.dim_c * self.dim_d;
        CMatrix::from_fn(out, self.dim_c, |row, col| self.isometry[(row * self.dim_e + e, col)])
    }

    /// `‖U†U − I‖_F`.
    pub fn isometry_defect(&self) -> f64 {
        self.isometry
            .adjoint()
            .matmul(&self.isometry)
            .distance(&CMatrix::identity(self.dim_c))
    }

    /// `(id_X ⊗ Λ)(ρ)` for `ρ` on `X ⊗ C` with `dim X = dim_x`.
    pub fn apply_to_last(&self, rho: &CMatrix, dim_x: usize) -> Result<CMatrix> {
        if rho.rows() != dim_x * self.dim_c || !rho.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "operator of size {} does not act on {dim_x}×{}",
                rho.rows(),
                self.dim_c
            )));
        }
        let idx = CMatrix::identity(dim_x);
        let n = dim_x * self.dim_c * self.dim_d;
        let mut out = CMatrix::zeros(n, n);
        for e in 0..self.dim_e {
            let k = idx.kron(&self.kraus(e));
            out = &out + &k.matmul(rho).matmul(&k.adjoint());
        }
        Ok(out)
    }

    pub fn apply(&self, sigma: &CMatrix) -> Result<CMatrix> {
        self.apply_to_last(sigma, 1)
    }

    /// Choi operator `Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)`.
    pub fn choi(&self) -> Result<CMatrix> {
        let d = self.dim_c;
        let omega: Vec<C64> = (0..d * d).map(|k| if k / d == k % d { r(1.0) } else { r(0.0) }).collect();
        self.apply_to_last(&CMatrix::outer(&omega, &omega), d)
    }

    /// Smallest Choi eigenvalue and the trace-preservation defect.
    pub fn cptp_check(&self) -> Result<(f64, f64)> {
        let choi = self.choi()?;
        let min = linalg::eig_hermitian(&choi)?.min_eigenvalue();
        let d = self.dim_c;
        let out = self.dim_c * self.dim_d;
        let reduced = CMatrix::from_fn(d, d, |i, j| (0..out).map(|t| choi[(i * out + t, j * out + t)]).sum());
        Ok((min, reduced.distance(&CMatrix::identity(d))))
    }
}

/// Builds the recovery map for `ρ_CD`. Inverse square roots act on the
/// support of `ρ_C` only; the isometry is completed on the kernel by
/// sending it to an extra environment level.
pub fn petz_channel(rho_c: &DensityOp, rho_cd: &DensityOp, tol: f64) -> Result<RecoveryChannel> {
    let (dc, dd) = match rho_cd.dims() {
        [c, d] => (*c, *d),
        other => return Err(Error::InvalidParties(format!("ρ_CD must be bipartite, got dims {other:?}"))),
    };
    if rho_c.dims() != [dc] {
        return Err(Error::DimensionMismatch(format!("ρ_C has dims {:?}, expected [{dc}]", rho_c.dims())));
    }
    let marginal = rho_cd.partial_trace(&[0])?;
    let gap = marginal.matrix().distance(rho_c.matrix());
    if gap > MARGINAL_TOL {
        return Err(Error::Precondition(format!(
            "supports do not match: tr_D ρ_CD differs from ρ_C by {gap:.3e}"
        )));
    }
    let sqrt_cd = linalg::fn_on_support(rho_cd.matrix(), f64::sqrt, tol)?;
    let inv_sqrt_c = linalg::fn_on_support(rho_c.matrix(), |x| 1.0 / x.sqrt(), tol)?;
    let support = linalg::support_projector(rho_c.matrix(), tol)?;
    let kernel = &CMatrix::identity(dc) - &support;
    let deficient = kernel.frobenius_norm() > 1e-6;
    let de = if deficient { dd + 1 } else { dd };
    let mut u = CMatrix::zeros(dc * dd * de, dc);
    for e in 0..dd {
        // (ρ_C^{-1/2} ⊗ |e⟩) has rows (c', d) nonzero only for d = e.
        let lift = CMatrix::from_fn(dc * dd, dc, |row, col| {
            if row % dd == e {
                inv_sqrt_c[(row / dd, col)]
            } else {
                r(0.0)
            }
        });
        let k = sqrt_cd.matmul(&lift);
        for row in 0..dc * dd {
            for col in 0..dc {
                u[(row * de + e, col)] = k[(row, col)];
            }
        }
    }
    if deficient {
        for c in 0..dc {
            for col in 0..dc {
                u[(c * dd * de + dd, col)] = kernel[(c, col)];
            }
        }
    }
    Ok(RecoveryChannel {
        dim_c: dc,
        dim_d: dd,
        dim_e: de,
        isometry: u,
    })
}

/// `‖(id_B ⊗ Λ)(ρ_BC) − ρ_BCD‖_F`.
pub fn verify_recovery(rho_bc: &DensityOp, ch: &RecoveryChannel, rho_bcd: &DensityOp) -> Result<f64> {
    let db = rho_bc.dims()[0];
    let out = ch.apply_to_last(rho_bc.matrix(), db)?;
    if out.rows() != rho_bcd.dim() {
        return Err(Error::DimensionMismatch("recovered operator and extension differ in size".into()));
    }
    Ok(out.distance(rho_bcd.matrix()))
}

/// `H(ρ_A) − H(ρ_AB)` in bits.
pub fn entropy_gap(psi: &PureState) -> Result<f64> {
    Ok(entropy(&reduce(psi, &[0])?)? - entropy(&reduce(psi, &[0, 1])?)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Extraction {
    /// Weight of each branch `i`; matches `p_i` when recovery is exact.
    pub branch_weights: Vec<f64>,
    pub decomposition: SeparableDecomposition,
}

/// Separable decomposition of `ρ_AB` from one of `ρ_BC`, via the
/// recovery isometry applied to `|Ψ⟩`. Refuses unless `H(ρ_A) = H(ρ_AB)`,
/// since otherwise the recovery is not exact (see [`verify_recovery`]).
pub fn extract_separable_ab(psi: &PureState, dec_bc: &SeparableDecomposition, tol: f64) -> Result<Extraction> {
    if psi.num_parties() != 3 {
        return Err(Error::InvalidParties("extraction needs a tripartite state".into()));
    }
    let gap = entropy_gap(psi)?;
    if gap.abs() > EQUALITY_TOL {
        return Err(Error::Precondition(format!(
            "entropy equality fails: H(ρ_A) − H(ρ_AB) = {gap:.4} bits, so the recovery map does not restore \
             the extension (verify_recovery reports the deviation)"
        )));
    }
    let dims = psi.dims();
    let (da, db, dc) = (dims[0], dims[1], dims[2]);
    if dec_bc.dims != [db, dc] {
        return Err(Error::DimensionMismatch(format!(
            "decomposition dims {:?} do not match ρ_BC dims [{db}, {dc}]",
            dec_bc.dims
        )));
    }
    let ext = build_extension(dec_bc)?;
    let rho_cd = ext.partial_trace(&[1, 2])?;
    let rho_c = reduce(psi, &[2])?;
    let ch = petz_channel(&rho_c, &rho_cd, tol)?;
    let (dd, de) = (ch.dim_d, ch.dim_e);
    let out = dc * dd * de;
    // Φ = (I_AB ⊗ U)|Ψ⟩ with rows (ab, c', d, e).
    let mut phi = vec![r(0.0); da * db * out];
    for ab in 0..da * db {
        for row in 0..out {
            phi[ab * out + row] = (0..dc).map(|c| ch.isometry[(row, c)] * psi.amps()[ab * dc + c]).sum();
        }
    }
    let mut branch_weights = Vec::with_capacity(dec_bc.len());
    let mut weights = Vec::new();
    let mut factors = Vec::new();
    for (i, bc) in dec_bc.factors.iter().enumerate() {
        // Branch i: project D on |i⟩ and keep A from the remainder.
        let mut sigma_a = CMatrix::zeros(da, da);
        let mut w = 0.0;
        for a in 0..da {
            for a2 in 0..da {
                let mut s = r(0.0);
                for b in 0..db {
                    for c in 0..dc {
                        for e in 0..de {
                            let off = ((c * dd + i) * de) + e;
                            s += phi[(a * db + b) * out + off] * phi[(a2 * db + b) * out + off].conj();
                        }
                    }
                }
                sigma_a[(a, a2)] = s;
            }
            w += sigma_a[(a, a)].re;
        }
        branch_weights.push(w);
        if w <= tol {
            continue;
        }
        let es = linalg::eig_hermitian(&sigma_a.scale_real(1.0 / w))?;
        for k in es.support_desc(tol) {
            weights.push(w * es.eigenvalues[k]);
            factors.push(vec![es.vector(k), bc[0].clone()]);
        }
    }
    let total: f64 = weights.iter().sum();
    let weights = weights.iter().map(|x| x / total).collect();
    let decomposition = SeparableDecomposition::new(vec![da, db], weights, factors)?;
    Ok(Extraction {
        branch_weights,
        decomposition,
    })
}

/// Outcome of the whole pipeline for one orientation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PetzReport {
    /// Parties of the input playing A, B and C.
    pub orientation: [usize; 3],
    pub entropy_gap: f64,
    pub terms: usize,
    pub isometry_defect: f64,
    pub choi_min_eigenvalue: f64,
    pub trace_defect: f64,
    pub recovery_deviation: f64,
    pub extraction: Option<Extraction>,
    pub refusal: Option<String>,
    pub rebuild_error: Option<f64>,
    /// Largest `|branch weight − p_i|`.
    pub weight_error: Option<f64>,
}

impl PetzReport {
    pub fn exact(&self, tol: f64) -> bool {
        self.recovery_deviation <= tol
    }
}

/// Runs extension, recovery and extraction with the input's parties
/// `orientation[0..3]` playing A, B and C. The decomposition of the B–C
/// pair is found automatically.
pub fn run_pipeline(psi: &PureState, orientation: [usize; 3], tol: f64) -> Result<PetzReport> {
    if psi.num_parties() != 3 {
        return Err(Error::InvalidParties("the recovery pipeline needs a tripartite state".into()));
    }
    let mut sorted = orientation;
    sorted.sort_unstable();
    if sorted != [0, 1, 2] {
        return Err(Error::InvalidParties(format!("{orientation:?} is not a permutation of the parties")));
    }
    let moved = psi.permute_parties(&orientation)?;
    let rho_bc = reduce(&moved, &[1, 2])?;
    let dec = anchor_decomposition(&moved, tol)?
        .ok_or_else(|| Error::Precondition("no separable decomposition of the B–C pair was found".into()))?;
    let ext = build_extension(&dec)?;
    let rho_cd = ext.partial_trace(&[1, 2])?;
    let rho_c = reduce(&moved, &[2])?;
    let ch = petz_channel(&rho_c, &rho_cd, tol)?;
    let (choi_min_eigenvalue, trace_defect) = ch.cptp_check()?;
    let recovery_deviation = verify_recovery(&rho_bc, &ch, &ext)?;
    let gap = entropy_gap(&moved)?;
    let (extraction, refusal) = match extract_separable_ab(&moved, &dec, tol) {
        Ok(x) => (Some(x), None),
        Err(Error::Precondition(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    let rho_ab = reduce(&moved, &[0, 1])?;
    let rebuild_error = extraction.as_ref().map(|x| x.decomposition.rebuild_error(&rho_ab));
    let weight_error = extraction.as_ref().map(|x| {
        x.branch_weights
            .iter()
            .zip(&dec.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    });
    Ok(PetzReport {
        orientation,
        entropy_gap: gap,
        terms: dec.len(),
        isometry_defect: ch.isometry_defect(),
        choi_min_eigenvalue,
        trace_defect,
        recovery_deviation,
        extraction,
        refusal,
        rebuild_error,
        weight_error,
    })
}

/// Separable decomposition of the B–C pair of `psi`, if one is found.
fn anchor_decomposition(psi: &PureState, tol: f64) -> Result<Option<SeparableDecomposition>> {
    let rho_bc = reduce(psi, &[1, 2])?;
    match find_classical_decomposition(&rho_bc, tol)? {
        Some(d) => Ok(Some(d)),
        None => find_conditional_decomposition(psi, 1, 2, tol),
    }
}

/// First party ordering whose B–C pair has a decomposition, preferring
/// one where the entropy equality holds.
pub fn choose_orientation(psi: &PureState, tol: f64) -> Result<Option<[usize; 3]>> {
    let mut fallback = None;
    for perm in crate::classify::PERMUTATIONS {
        let moved = psi.permute_parties(&perm)?;
        if anchor_decomposition(&moved, tol)?.is_none() {
            continue;
        }
        if entropy_gap(&moved)?.abs() <= EQUALITY_TOL {
            return Ok(Some(perm));
        }
        fallback.get_or_insert(perm);
    }
    Ok(fallback)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_family, random_two_separable, Family};
    use crate::linalg::DEFAULT_TOL;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ghz() -> PureState {
        make_family(&Family::Ghz { d: 2 }).unwrap().0
    }

    #[test]
    fn ghz_extension_is_classical() {
        let rho_bc = reduce(&ghz(), &[1, 2]).unwrap();
        let dec = find_classical_decomposition(&rho_bc, DEFAULT_TOL).unwrap().unwrap();
        let ext = build_extension(&dec).unwrap();
        let mut expected = CMatrix::zeros(8, 8);
        expected[(0, 0)] = r(0.5);
        expected[(7, 7)] = r(0.5);
        assert!(ext.matrix().distance(&expected) < 1e-12);
    }

    #[test]
    fn single_term_extension_is_pure_product() {
        let dec = SeparableDecomposition::new(
            vec![2, 2],
            vec![1.0],
            vec![vec![linalg::basis_vector(2, 1), linalg::basis_vector(2, 0)]],
        )
        .unwrap();
        let ext = build_extension(&dec).unwrap();
        assert_eq!(ext.dims(), &[2, 2, 1]);
        assert!((ext.matrix()[(2, 2)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_extension_traces_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let factors: Vec<Vec<Vec<C64>>> = (0..3)
            .map(|_| {
                vec![
                    crate::sampling::random_unit_vector(2, &mut rng),
                    crate::sampling::random_unit_vector(3, &mut rng),
                ]
            })
            .collect();
        let dec = SeparableDecomposition::new(vec![2, 3], vec![0.5, 0.3, 0.2], factors).unwrap();
        let ext = build_extension(&dec).unwrap();
        assert!(ext.partial_trace(&[0, 1]).unwrap().matrix().distance(&dec.rebuild()) < 1e-12);
        assert!(SeparableDecomposition::new(vec![2, 3], vec![0.5, 0.4], dec.factors[..2].to_vec()).is_err());
    }

    #[test]
    fn trivial_environment_is_identity() {
        let rho_c = DensityOp::new(vec![2], CMatrix::from_real_diag(&[0.7, 0.3]), DEFAULT_TOL).unwrap();
        let rho_cd = DensityOp::new(vec![2, 1], rho_c.matrix().clone(), DEFAULT_TOL).unwrap();
        let ch = petz_channel(&rho_c, &rho_cd, DEFAULT_TOL).unwrap();
        let sigma = CMatrix::from_real_rows(&[&[0.5, 0.2], &[0.2, 0.5]]);
        assert!(ch.apply(&sigma).unwrap().distance(&sigma) < 1e-12);
        let rho_bc = DensityOp::new(vec![1, 2], rho_c.matrix().clone(), DEFAULT_TOL).unwrap();
        let rho_bcd = DensityOp::new(vec![1, 2, 1], rho_c.matrix().clone(), DEFAULT_TOL).unwrap();
        assert!(verify_recovery(&rho_bc, &ch, &rho_bcd).unwrap() < 1e-12);
    }

    #[test]
    fn classical_map_copies_index() {
        let p = [0.6, 0.3, 0.1];
        let rho_c = DensityOp::new(vec![3], CMatrix::from_real_diag(&p), DEFAULT_TOL).unwrap();
        let mut diag = vec![0.0; 9];
        for i in 0..3 {
            diag[i * 3 + i] = p[i];
        }
        let rho_cd = DensityOp::new(vec![3, 3], CMatrix::from_real_diag(&diag), DEFAULT_TOL).unwrap();
        let ch = petz_channel(&rho_c, &rho_cd, DEFAULT_TOL).unwrap();
        assert!(ch.isometry_defect() < 1e-12);
        for i in 0..3 {
            let e = linalg::basis_vector(3, i);
            let out = ch.apply(&CMatrix::projector(&e)).unwrap();
            let copied = CMatrix::projector(&linalg::kron_vec(&e, &e));
            assert!(out.distance(&copied) < 1e-12);
        }
        let (min, tp) = ch.cptp_check().unwrap();
        assert!(min > -1e-12 && tp < 1e-12);
    }

    #[test]
    fn rank_deficient_marginal_still_isometric() {
        let rho_c = DensityOp::new(vec![3], CMatrix::from_real_diag(&[0.5, 0.5, 0.0]), DEFAULT_TOL).unwrap();
        let rho_cd = DensityOp::new(vec![3, 2], CMatrix::from_real_diag(&[0.5, 0.0, 0.0, 0.5, 0.0, 0.0]), DEFAULT_TOL).unwrap();
        let ch = petz_channel(&rho_c, &rho_cd, DEFAULT_TOL).unwrap();
        assert!(ch.isometry_defect() < 1e-12);
        let bad = DensityOp::new(vec![3], CMatrix::from_real_diag(&[0.4, 0.6, 0.0]), DEFAULT_TOL).unwrap();
        assert!(matches!(petz_channel(&bad, &rho_cd, DEFAULT_TOL), Err(Error::Precondition(_))));
    }

    #[test]
    fn ghz_pipeline() {
        let rep = run_pipeline(&ghz(), [0, 1, 2], DEFAULT_TOL).unwrap();
        assert!(rep.recovery_deviation < 1e-9);
        assert!(rep.rebuild_error.unwrap() < 1e-9);
        assert!(rep.weight_error.unwrap() < 1e-9);
        assert!(rep.isometry_defect < 1e-9);
    }

    #[test]
    fn two_separable_pipeline() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let psi = random_two_separable(3, 3, &mut rng).unwrap();
            // B–C is the maximally correlated pair here; anchor on A–C.
            assert_eq!(choose_orientation(&psi, DEFAULT_TOL).unwrap(), Some([1, 0, 2]));
            let rep = run_pipeline(&psi, [1, 0, 2], DEFAULT_TOL).unwrap();
            assert!(rep.recovery_deviation < 1e-8, "{}", rep.recovery_deviation);
            assert!(rep.rebuild_error.unwrap() < 1e-7);
        }
    }

    #[test]
    fn counterexample_is_refused() {
        let (psi, _) = make_family(&Family::Counterexample232).unwrap();
        for orientation in [[2, 1, 0], [1, 2, 0]] {
            let rep = run_pipeline(&psi, orientation, DEFAULT_TOL).unwrap();
            assert!(rep.entropy_gap.abs() > 0.1);
            assert!(rep.refusal.is_some() && rep.extraction.is_none());
            assert!(rep.recovery_deviation > 1e-3);
            assert!(rep.isometry_defect < 1e-9);
        }
    }
}
