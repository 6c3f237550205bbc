//! Pure states, density operators and the usual operations on them.
//!
//! Party 0 is always the slowest-varying tensor index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, eig_hermitian, r, CMatrix, EigenSystem, C64, DEFAULT_TOL};

const NORM_TOL: f64 = 1e-9;
const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
const DENSITY_TRACE_TOL: f64 = 1e-9;

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

pub(crate) fn unflatten(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
    out
}

pub(crate) fn flatten(multi: &[usize], dims: &[usize]) -> usize {
    multi
        .iter()
        .zip(dims)
        .fold(0, |acc, (&i, &d)| acc * d + i)
}

/// Reorders the axes of a tensor: output axis `k` is input axis `perm[k]`.
pub(crate) fn permute_axes(data: &[C64], dims: &[usize], perm: &[usize]) -> Vec<C64> {
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let old_strides = strides(dims);
    let mut out = vec![r(0.0); data.len()];
    for (new_flat, slot) in out.iter_mut().enumerate() {
        let multi = unflatten(new_flat, &new_dims);
        let old_flat: usize = multi
            .iter()
            .zip(perm)
            .map(|(&i, &p)| i * old_strides[p])
            .sum();
        *slot = data[old_flat];
    }
    out
}

fn validate_parties(n: usize, parties: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &p in parties {
        if p >= n {
            return Err(Error::InvalidParties(format!("party {p} out of range for {n} parties")));
        }
        if seen[p] {
            return Err(Error::InvalidParties(format!("party {p} listed twice")));
        }
        seen[p] = true;
    }
    Ok(())
}

fn complement(n: usize, parties: &[usize]) -> Vec<usize> {
    (0..n).filter(|p| !parties.contains(p)).collect()
}

/// Multipartite pure state `|Ψ⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

impl PureState {
    /// Requires unit norm within `1e-9`.
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        let state = Self::unchecked(dims, amps)?;
        let n = linalg::norm(&state.amps);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(state)
    }

    /// Normalizes the amplitudes; errors on the zero vector.
    pub fn from_unnormalized(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        let mut state = Self::unchecked(dims, amps)?;
        let n = linalg::norm(&state.amps);
        if n <= 1e-300 {
            return Err(Error::NotNormalized(n));
        }
        for a in &mut state.amps {
            *a /= n;
        }
        Ok(state)
    }

    fn unchecked(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidParties(format!(
                "a state needs at least 2 parties, got {}",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidParties("party dimensions must be ≥ 1".into()));
        }
        let total: usize = dims.iter().product();
        if amps.len() != total {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for dims {:?}",
                amps.len(),
                dims
            )));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dims, amps })
    }

    /// Builds a state from `(multi-index, amplitude)` terms, then normalizes.
    pub fn from_terms(dims: Vec<usize>, terms: &[(&[usize], C64)]) -> Result<Self> {
        let total: usize = dims.iter().product();
        let mut amps = vec![r(0.0); total];
        for (idx, a) in terms {
            if idx.len() != dims.len() || idx.iter().zip(&dims).any(|(i, d)| i >= d) {
                return Err(Error::InvalidParameters(format!("index {idx:?} outside {dims:?}")));
            }
            amps[flatten(idx, &dims)] += a;
        }
        Self::from_unnormalized(dims, amps)
    }

    /// `|v_1⟩ ⊗ … ⊗ |v_N⟩`, normalized.
    pub fn product(factors: &[Vec<C64>]) -> Result<Self> {
        let dims = factors.iter().map(|f| f.len()).collect();
        let amps = factors
            .iter()
            .skip(1)
            .fold(factors[0].clone(), |acc, f| linalg::kron_vec(&acc, f));
        Self::from_unnormalized(dims, amps)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn num_parties(&self) -> usize {
        self.dims.len()
    }

    pub fn amplitude(&self, idx: &[usize]) -> C64 {
        self.amps[flatten(idx, &self.dims)]
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        linalg::inner(&self.amps, &other.amps)
    }

    /// `|Ψ⟩⟨Ψ|`
    pub fn density(&self) -> DensityOp {
        DensityOp {
            dims: self.dims.clone(),
            mat: CMatrix::projector(&self.amps),
        }
    }

    /// Reorders parties: new party `k` is old party `perm[k]`.
    pub fn permute_parties(&self, perm: &[usize]) -> Result<PureState> {
        if perm.len() != self.dims.len() {
            return Err(Error::InvalidParties(format!("permutation {perm:?} has wrong length")));
        }
        validate_parties(self.dims.len(), perm)?;
        Ok(PureState {
            dims: perm.iter().map(|&p| self.dims[p]).collect(),
            amps: permute_axes(&self.amps, &self.dims, perm),
        })
    }

    /// Applies `U_1 ⊗ … ⊗ U_N`.
    pub fn apply_local(&self, unitaries: &[CMatrix]) -> Result<PureState> {
        if unitaries.len() != self.dims.len() {
            return Err(Error::DimensionMismatch("one operator per party required".into()));
        }
        let mut amps = self.amps.clone();
        for (party, u) in unitaries.iter().enumerate() {
            if u.rows() != self.dims[party] || u.cols() != self.dims[party] {
                return Err(Error::DimensionMismatch(format!(
                    "operator for party {party} is {}x{}",
                    u.rows(),
                    u.cols()
                )));
            }
            amps = apply_on_axis(&amps, &self.dims, party, u);
        }
        Ok(PureState {
            dims: self.dims.clone(),
            amps,
        })
    }

    /// Amplitude matrix with rows indexed by `rows` (in the given order) and
    /// columns by the remaining parties in ascending order.
    pub fn flattening(&self, rows: &[usize]) -> Result<CMatrix> {
        validate_parties(self.dims.len(), rows)?;
        let rest = complement(self.dims.len(), rows);
        let perm: Vec<usize> = rows.iter().chain(&rest).copied().collect();
        let nrows: usize = rows.iter().map(|&p| self.dims[p]).product();
        let ncols = self.amps.len() / nrows;
        CMatrix::new(nrows, ncols, permute_axes(&self.amps, &self.dims, &perm))
    }

    /// Rank of the single-party reduced state.
    pub fn local_rank(&self, party: usize, tol: f64) -> Result<usize> {
        Ok(eig_hermitian(reduce(self, &[party])?.matrix())?.rank(tol))
    }

    pub fn local_ranks(&self, tol: f64) -> Result<Vec<usize>> {
        (0..self.dims.len()).map(|p| self.local_rank(p, tol)).collect()
    }
}

fn apply_on_axis(amps: &[C64], dims: &[usize], axis: usize, u: &CMatrix) -> Vec<C64> {
    let st = strides(dims);
    let d = dims[axis];
    let mut out = vec![r(0.0); amps.len()];
    for (flat, slot) in out.iter_mut().enumerate() {
        let i = (flat / st[axis]) % d;
        let base = flat - i * st[axis];
        *slot = (0..d).map(|k| u[(i, k)] * amps[base + k * st[axis]]).sum();
    }
    out
}

/// Density operator with subsystem structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityOp {
    dims: Vec<usize>,
    mat: CMatrix,
}

impl DensityOp {
    /// Validates Hermiticity (1e-10), unit trace (1e-9) and positivity (`tol`).
    pub fn new(dims: Vec<usize>, mat: CMatrix, tol: f64) -> Result<Self> {
        let op = Self::unchecked(dims, mat)?;
        op.validate(tol)?;
        Ok(op)
    }

    /// Normalizes the trace, then validates.
    pub fn from_unnormalized(dims: Vec<usize>, mat: CMatrix, tol: f64) -> Result<Self> {
        let tr = mat.trace().re;
        if tr.abs() <= 1e-300 {
            return Err(Error::InvalidTrace(tr));
        }
        Self::new(dims, mat.hermitian_part().scale_real(1.0 / tr), tol)
    }

    pub(crate) fn unchecked(dims: Vec<usize>, mat: CMatrix) -> Result<Self> {
        let total: usize = dims.iter().product();
        if !mat.is_square() {
            return Err(Error::NotSquare(mat.rows(), mat.cols()));
        }
        if mat.rows() != total || dims.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for dims {:?}",
                mat.rows(),
                mat.cols(),
                dims
            )));
        }
        Ok(Self { dims, mat })
    }

    fn validate(&self, tol: f64) -> Result<()> {
        if !self.mat.is_hermitian(DENSITY_HERMITIAN_TOL) {
            return Err(Error::NotHermitian(self.mat.hermitian_defect()));
        }
        let tr = self.mat.trace();
        if (tr.re - 1.0).abs() > DENSITY_TRACE_TOL || tr.im.abs() > DENSITY_TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let chk = linalg::is_psd(&self.mat, tol)?;
        if !chk.is_psd {
            return Err(Error::NotPsd(chk.min_eigenvalue));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn num_parties(&self) -> usize {
        self.dims.len()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn eigen(&self) -> Result<EigenSystem> {
        eig_hermitian(&self.mat)
    }

    /// Eigenvalues sorted in descending order.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let mut s = self.eigen()?.eigenvalues;
        s.reverse();
        Ok(s)
    }

    pub fn rank(&self, tol: f64) -> Result<usize> {
        Ok(self.eigen()?.rank(tol))
    }

    /// Keeps `keep` (in the given order) and traces out the rest.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOp> {
        if keep.is_empty() {
            return Err(Error::InvalidParties("nothing to keep".into()));
        }
        validate_parties(self.dims.len(), keep)?;
        let rest = complement(self.dims.len(), keep);
        let perm: Vec<usize> = keep.iter().chain(&rest).copied().collect();
        let p = self.permute_parties(&perm)?;
        let dk: usize = keep.iter().map(|&k| self.dims[k]).product();
        let dr = self.dim() / dk;
        let m = &p.mat;
        let out = CMatrix::from_fn(dk, dk, |i, j| {
            (0..dr).map(|t| m[(i * dr + t, j * dr + t)]).sum()
        });
        Ok(DensityOp {
            dims: keep.iter().map(|&k| self.dims[k]).collect(),
            mat: out,
        })
    }

    /// New party `k` is old party `perm[k]`.
    pub fn permute_parties(&self, perm: &[usize]) -> Result<DensityOp> {
        if perm.len() != self.dims.len() {
            return Err(Error::InvalidParties(format!("permutation {perm:?} has wrong length")));
        }
        validate_parties(self.dims.len(), perm)?;
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let mut doubled_dims = self.dims.clone();
        doubled_dims.extend_from_slice(&self.dims);
        let n = self.dims.len();
        let doubled_perm: Vec<usize> = perm.iter().copied().chain(perm.iter().map(|&p| p + n)).collect();
        let data = permute_axes(self.mat.data(), &doubled_dims, &doubled_perm);
        let d = self.dim();
        Ok(DensityOp {
            dims: perm.iter().map(|&p| self.dims[p]).collect(),
            mat: CMatrix::new(d, d, data)?,
        })
    }

    /// Merges `left` (in order) into one subsystem and the remaining parties
    /// (ascending) into a second one.
    pub fn group(&self, left: &[usize]) -> Result<DensityOp> {
        if left.is_empty() || left.len() >= self.dims.len() {
            return Err(Error::InvalidParties(format!(
                "cut {left:?} is not a proper bipartition of {} parties",
                self.dims.len()
            )));
        }
        let rest = complement(self.dims.len(), left);
        let perm: Vec<usize> = left.iter().chain(&rest).copied().collect();
        let p = self.permute_parties(&perm)?;
        let dl: usize = left.iter().map(|&k| self.dims[k]).product();
        Ok(DensityOp {
            dims: vec![dl, self.dim() / dl],
            mat: p.mat,
        })
    }

    /// `(A ⊗ B) ρ (A ⊗ B)†` for local operators on a two-party operator,
    /// without renormalization.
    pub fn local_sandwich(&self, a: &CMatrix, b: &CMatrix) -> CMatrix {
        let k = a.kron(b);
        k.matmul(&self.mat).matmul(&k.adjoint())
    }
}

/// `tr_{rest} |ψ⟩⟨ψ|`, keeping `keep` in the given order.
pub fn reduce(psi: &PureState, keep: &[usize]) -> Result<DensityOp> {
    if keep.is_empty() || keep.len() >= psi.num_parties() {
        return Err(Error::InvalidParties(format!(
            "keep set {keep:?} must be a nonempty proper subset of {} parties",
            psi.num_parties()
        )));
    }
    let m = psi.flattening(keep)?;
    let rho = m.matmul(&m.adjoint());
    Ok(DensityOp {
        dims: keep.iter().map(|&k| psi.dims()[k]).collect(),
        mat: rho.hermitian_part(),
    })
}

/// Partial transpose on `parties`.
pub fn partial_transpose(rho: &DensityOp, parties: &[usize]) -> Result<CMatrix> {
    validate_parties(rho.num_parties(), parties)?;
    let dims = rho.dims();
    let st = strides(dims);
    let d = rho.dim();
    let m = rho.matrix();
    let mut out = CMatrix::zeros(d, d);
    for i in 0..d {
        let mi = unflatten(i, dims);
        for j in 0..d {
            let mj = unflatten(j, dims);
            let (mut ni, mut nj) = (i, j);
            for &p in parties {
                ni = ni - mi[p] * st[p] + mj[p] * st[p];
                nj = nj - mj[p] * st[p] + mi[p] * st[p];
            }
            out[(ni, nj)] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Schmidt decomposition across a bipartition.
#[derive(Debug, Clone)]
pub struct SchmidtForm {
    /// Descending, each `√p_i`.
    pub coefficients: Vec<f64>,
    pub left_basis: Vec<Vec<C64>>,
    pub right_basis: Vec<Vec<C64>>,
    pub left_parties: Vec<usize>,
    pub right_parties: Vec<usize>,
}

impl SchmidtForm {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// Rebuilds the state vector in the original party order.
    pub fn reconstruct(&self, dims: &[usize]) -> Result<PureState> {
        let grouped: Vec<C64> = {
            let dl = self.left_basis.first().map_or(1, Vec::len);
            let dr = self.right_basis.first().map_or(1, Vec::len);
            let mut v = vec![r(0.0); dl * dr];
            for ((s, u), w) in self.coefficients.iter().zip(&self.left_basis).zip(&self.right_basis) {
                for a in 0..dl {
                    for b in 0..dr {
                        v[a * dr + b] += u[a] * w[b] * *s;
                    }
                }
            }
            v
        };
        let order: Vec<usize> = self.left_parties.iter().chain(&self.right_parties).copied().collect();
        let grouped_dims: Vec<usize> = order.iter().map(|&p| dims[p]).collect();
        let mut inverse = vec![0; order.len()];
        for (k, &p) in order.iter().enumerate() {
            inverse[p] = k;
        }
        let amps = permute_axes(&grouped, &grouped_dims, &inverse);
        PureState::from_unnormalized(dims.to_vec(), amps)
    }
}

/// Schmidt decomposition of `psi` across `left | rest`, computed from the
/// eigen-decomposition of the left reduced operator.
pub fn schmidt(psi: &PureState, left: &[usize], tol: f64) -> Result<SchmidtForm> {
    if left.is_empty() || left.len() >= psi.num_parties() {
        return Err(Error::InvalidParties(format!("cut {left:?} is not a proper bipartition")));
    }
    let m = psi.flattening(left)?;
    let rho = m.matmul(&m.adjoint());
    let es = eig_hermitian(&rho)?;
    let mdag = m.adjoint();
    let mut coefficients = Vec::new();
    let mut left_basis = Vec::new();
    let mut right_basis = Vec::new();
    for k in es.support_desc(tol) {
        let lambda = es.eigenvalues[k];
        let u = es.vector(k);
        let s = lambda.sqrt();
        let w: Vec<C64> = mdag.mat_vec(&u).into_iter().map(|z| z / s).collect();
        // M†u is the conjugate-side partner; conjugate to get the right factor.
        let w: Vec<C64> = w.into_iter().map(|z| z.conj()).collect();
        coefficients.push(s);
        left_basis.push(u);
        right_basis.push(w);
    }
    Ok(SchmidtForm {
        coefficients,
        left_basis,
        right_basis,
        left_parties: left.to_vec(),
        right_parties: complement(psi.num_parties(), left),
    })
}

/// Purification `Σ_k √λ_k |v_k⟩|k⟩` in the eigenbasis of `rho`; the
/// environment is appended as the last party with dimension `rank(rho)`.
pub fn purify(rho: &DensityOp, tol: f64) -> Result<PureState> {
    let es = rho.eigen()?;
    let support = es.support_desc(tol);
    let rank = support.len();
    let d = rho.dim();
    let mut amps = vec![r(0.0); d * rank];
    for (k, &idx) in support.iter().enumerate() {
        let s = es.eigenvalues[idx].sqrt();
        let v = es.vector(idx);
        for i in 0..d {
            amps[i * rank + k] = v[i] * s;
        }
    }
    let mut dims = rho.dims().to_vec();
    dims.push(rank);
    PureState::from_unnormalized(dims, amps)
}

/// Von Neumann entropy in bits.
pub fn entropy(rho: &DensityOp) -> Result<f64> {
    Ok(entropy_of_spectrum(&rho.eigen()?.eigenvalues))
}

pub fn entropy_of_spectrum(spectrum: &[f64]) -> f64 {
    spectrum
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// `D(ρ‖σ) = tr ρ log ρ − tr ρ log σ` in bits; `+∞` if `supp ρ ⊄ supp σ`.
pub fn rel_entropy(rho: &DensityOp, sigma: &DensityOp) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy of {}- and {}-dimensional operators",
            rho.dim(),
            sigma.dim()
        )));
    }
    let neg_h = -entropy(rho)?;
    let es = sigma.eigen()?;
    let cut = es.rank_cutoff(DEFAULT_TOL);
    let mut cross = 0.0;
    for k in 0..es.eigenvalues.len() {
        let v = es.vector(k);
        let weight = rho.matrix().sandwich(&v, &v).re;
        if es.eigenvalues[k] > cut {
            cross += weight * es.eigenvalues[k].log2();
        } else if weight > DEFAULT_TOL {
            return Ok(f64::INFINITY);
        }
    }
    Ok(neg_h - cross)
}

/// `x ≻ y`: every partial sum of descending `x` dominates that of `y`
/// (within `1e-9`). Shorter lists are padded with zeros.
pub fn majorizes(x: &[f64], y: &[f64]) -> Result<bool> {
    let prep = |v: &[f64]| -> Result<Vec<f64>> {
        if let Some(bad) = v.iter().find(|&&e| e < -DEFAULT_TOL || !e.is_finite()) {
            return Err(Error::InvalidSpectrum(format!("negative or non-finite entry {bad}")));
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidSpectrum(format!("entries sum to {sum}")));
        }
        let mut s: Vec<f64> = v.iter().map(|e| e.max(0.0)).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    };
    let mut xs = prep(x)?;
    let mut ys = prep(y)?;
    let n = xs.len().max(ys.len());
    xs.resize(n, 0.0);
    ys.resize(n, 0.0);
    let (mut sx, mut sy) = (0.0, 0.0);
    for k in 0..n {
        sx += xs[k];
        sy += ys[k];
        if sx < sy - 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `ℓ∞` distance between two spectra after sorting and zero padding.
pub fn spectrum_distance(x: &[f64], y: &[f64]) -> f64 {
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(|a, b| b.total_cmp(a));
    ys.sort_by(|a, b| b.total_cmp(a));
    let n = xs.len().max(ys.len());
    xs.resize(n, 0.0);
    ys.resize(n, 0.0);
    xs.iter().zip(&ys).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_pure_state, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ghz3() -> PureState {
        PureState::from_terms(vec![2, 2, 2], &[(&[0, 0, 0], r(1.0)), (&[1, 1, 1], r(1.0))]).unwrap()
    }

    fn bell() -> PureState {
        PureState::from_terms(vec![2, 2], &[(&[0, 0], r(1.0)), (&[1, 1], r(1.0))]).unwrap()
    }

    #[test]
    fn ghz_pair_reduction_is_classical() {
        let rho = reduce(&ghz3(), &[0, 1]).unwrap();
        assert!(rho.matrix().distance(&CMatrix::from_real_diag(&[0.5, 0.0, 0.0, 0.5])) < 1e-15);
    }

    #[test]
    fn product_reduction() {
        let psi = PureState::from_terms(vec![2, 2, 2], &[(&[0, 0, 0], r(1.0))]).unwrap();
        let rho = reduce(&psi, &[1, 2]).unwrap();
        assert!(rho.matrix().distance(&CMatrix::from_real_diag(&[1.0, 0.0, 0.0, 0.0])) < 1e-15);
    }

    #[test]
    fn counterexample_bc_reduction_by_hand() {
        // tr_A of (|000⟩+|011⟩+|111⟩)/√3 = ⅓[(|00⟩+|11⟩)(⟨00|+⟨11|) + |11⟩⟨11|]
        let psi = PureState::from_terms(
            vec![2, 2, 2],
            &[(&[0, 0, 0], r(1.0)), (&[0, 1, 1], r(1.0)), (&[1, 1, 1], r(1.0))],
        )
        .unwrap();
        let rho = reduce(&psi, &[1, 2]).unwrap();
        let t = 1.0 / 3.0;
        let expected = CMatrix::from_real_rows(&[
            &[t, 0.0, 0.0, t],
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
            &[t, 0.0, 0.0, 2.0 * t],
        ]);
        assert!(rho.matrix().distance(&expected) < 1e-15);
    }

    #[test]
    fn reduce_rejects_bad_keep_sets() {
        assert!(reduce(&ghz3(), &[]).is_err());
        assert!(reduce(&ghz3(), &[0, 1, 2]).is_err());
        assert!(reduce(&ghz3(), &[0, 0]).is_err());
    }

    #[test]
    fn ordered_reduction_matches_permuted_parties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_pure_state(&[2, 3, 2], &mut rng);
        let a = reduce(&psi, &[2, 0]).unwrap();
        let b = reduce(&psi, &[0, 2]).unwrap().permute_parties(&[1, 0]).unwrap();
        assert_eq!(a.dims(), &[2, 2]);
        assert!(a.matrix().distance(b.matrix()) < 1e-14);
    }

    #[test]
    fn partial_transpose_examples() {
        let sep = reduce(&ghz3(), &[0, 1]).unwrap();
        let pt = partial_transpose(&sep, &[1]).unwrap();
        assert!(pt.distance(sep.matrix()) < 1e-15);
        let bell = bell().density();
        let pt = partial_transpose(&bell, &[1]).unwrap();
        let es = eig_hermitian(&pt).unwrap();
        assert!((es.min_eigenvalue() + 0.5).abs() < 1e-14);
        let twice = partial_transpose(
            &DensityOp::unchecked(vec![2, 2], pt).unwrap(),
            &[1],
        )
        .unwrap();
        assert!(twice.distance(bell.matrix()) < 1e-12);
    }

    #[test]
    fn schmidt_examples() {
        let s = schmidt(&bell(), &[0], DEFAULT_TOL).unwrap();
        assert_eq!(s.rank(), 2);
        for c in &s.coefficients {
            assert!((c - 0.5f64.sqrt()).abs() < 1e-12);
        }
        let prod = PureState::from_terms(vec![2, 3], &[(&[1, 2], r(1.0))]).unwrap();
        let s = schmidt(&prod, &[0], DEFAULT_TOL).unwrap();
        assert_eq!(s.coefficients.len(), 1);
        assert!((s.coefficients[0] - 1.0).abs() < 1e-12);

        let s = schmidt(&ghz3(), &[0], DEFAULT_TOL).unwrap();
        assert_eq!(s.rank(), 2);
        // right basis spans {|00⟩, |11⟩}
        for w in &s.right_basis {
            assert!(w[1].norm() < 1e-12 && w[2].norm() < 1e-12);
        }
        let back = s.reconstruct(ghz3().dims()).unwrap();
        assert!((back.inner(&ghz3()).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schmidt_reconstructs_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let psi = random_pure_state(&[2, 3, 2], &mut rng);
            for cut in [vec![0], vec![1], vec![2, 0]] {
                let s = schmidt(&psi, &cut, DEFAULT_TOL).unwrap();
                let back = s.reconstruct(psi.dims()).unwrap();
                let diff: f64 = back
                    .amps()
                    .iter()
                    .zip(psi.amps())
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(diff < 1e-8, "cut {cut:?} diff {diff}");
                let sum: f64 = s.coefficients.iter().map(|c| c * c).sum();
                assert!((sum - 1.0).abs() < 1e-9);
                let rank = reduce(&psi, &cut).unwrap().rank(DEFAULT_TOL).unwrap();
                assert_eq!(rank, s.rank());
            }
        }
    }

    #[test]
    fn purify_examples() {
        let pure = DensityOp::new(vec![2], CMatrix::from_real_diag(&[1.0, 0.0]), DEFAULT_TOL).unwrap();
        let p = purify(&pure, DEFAULT_TOL).unwrap();
        assert_eq!(p.dims(), &[2, 1]);
        assert!((p.amplitude(&[0, 0]).norm() - 1.0).abs() < 1e-14);

        let mixed = DensityOp::new(vec![2], CMatrix::from_real_diag(&[0.5, 0.5]), DEFAULT_TOL).unwrap();
        let p = purify(&mixed, DEFAULT_TOL).unwrap();
        let s = schmidt(&p, &[0], DEFAULT_TOL).unwrap();
        for c in &s.coefficients {
            assert!((c - 0.5f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn purify_then_reduce_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = random_pure_state(&[3, 2, 2], &mut rng);
        let rho = reduce(&psi, &[0, 1]).unwrap();
        let p = purify(&rho, DEFAULT_TOL).unwrap();
        assert_eq!(p.dims(), &[3, 2, 2]);
        let back = reduce(&p, &[0, 1]).unwrap();
        assert!(back.matrix().distance(rho.matrix()) < 1e-8);
        assert_eq!(p.local_rank(2, DEFAULT_TOL).unwrap(), rho.rank(DEFAULT_TOL).unwrap());
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityOp::new(vec![2], CMatrix::from_real_diag(&[1.0, 0.0]), DEFAULT_TOL).unwrap();
        assert_eq!(entropy(&pure).unwrap(), 0.0);
        let half = DensityOp::new(vec![2], CMatrix::from_real_diag(&[0.5, 0.5]), DEFAULT_TOL).unwrap();
        assert!((entropy(&half).unwrap() - 1.0).abs() < 1e-14);
        let skew = DensityOp::new(vec![2], CMatrix::from_real_diag(&[0.75, 0.25]), DEFAULT_TOL).unwrap();
        let d = rel_entropy(&half, &skew).unwrap();
        // −1 − ½log₂(3/4) − ½log₂(1/4) = 1 − ½log₂3
        assert!((d - (1.0 - 0.5 * 3f64.log2())).abs() < 1e-12);
        assert!((d - 0.20752).abs() < 1e-5);
        assert!(rel_entropy(&half, &half).unwrap().abs() < 1e-9);
        assert_eq!(rel_entropy(&half, &pure).unwrap(), f64::INFINITY);
    }

    #[test]
    fn entropy_is_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = random_pure_state(&[3, 3], &mut rng);
        let rho = reduce(&psi, &[0]).unwrap();
        let u = random_unitary(3, &mut rng);
        let rotated = DensityOp::new(vec![3], rho.matrix().conjugate_by(&u), DEFAULT_TOL).unwrap();
        assert!((entropy(&rho).unwrap() - entropy(&rotated).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn majorization_examples() {
        assert!(majorizes(&[1.0, 0.0], &[0.5, 0.5]).unwrap());
        assert!(!majorizes(&[0.5, 0.5], &[1.0, 0.0]).unwrap());
        assert!(majorizes(&[0.5, 0.3, 0.2], &[0.4, 0.4, 0.2]).unwrap());
        assert!(majorizes(&[1.0], &[0.5, 0.25, 0.25]).unwrap());
        assert!(majorizes(&[-0.5, 1.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn local_unitaries_preserve_reduced_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let psi = random_pure_state(&[2, 3, 2], &mut rng);
        let us: Vec<CMatrix> = psi.dims().iter().map(|&d| random_unitary(d, &mut rng)).collect();
        let rotated = psi.apply_local(&us).unwrap();
        let a = reduce(&psi, &[0, 2]).unwrap().spectrum().unwrap();
        let b = reduce(&rotated, &[0, 2]).unwrap().spectrum().unwrap();
        assert!(spectrum_distance(&a, &b) < 1e-12);
    }
}
