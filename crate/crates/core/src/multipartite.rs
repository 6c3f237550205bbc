//! N-party checks: PPT across every bipartition, generalized GHZ detection
//! and the equivalence between non-distillable reductions and the GHZ form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::Status;
use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix, C64};
use crate::qstate::{partial_transpose, reduce, schmidt, DensityOp, PureState};
use crate::sampling::random_unit_vector;

/// Enumerating cuts beyond this many subsystems is not desk scale.
pub const MAX_PARTIES: usize = 10;
const RECONSTRUCT_TOL: f64 = 1e-8;
const ORTHO_TOL: f64 = 1e-8;
const DIAGONAL_TOL: f64 = 1e-8;
/// Relative gap below which Schmidt coefficients count as degenerate.
const DEGENERACY_GAP: f64 = 1e-6;
const CONTRACTION_ATTEMPTS: u64 = 8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutVerdict {
    /// Party labels on the transposed side.
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub status: Status,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BipartitionReport {
    /// Labels of the subsystems of the checked operator.
    pub labels: Vec<usize>,
    pub cuts: Vec<CutVerdict>,
    pub overall: Status,
}

impl BipartitionReport {
    pub fn failing(&self) -> impl Iterator<Item = &CutVerdict> {
        self.cuts.iter().filter(|c| c.status == Status::Fails)
    }
}

/// PPT across all `2^(m−1) − 1` cuts, labelling subsystems `0..m`.
pub fn check_all_bipartitions_ppt(rho: &DensityOp, tol: f64) -> Result<BipartitionReport> {
    let labels: Vec<usize> = (0..rho.num_parties()).collect();
    check_all_bipartitions_ppt_labelled(rho, &labels, tol)
}

/// As [`check_all_bipartitions_ppt`], reporting cuts with `labels`.
pub fn check_all_bipartitions_ppt_labelled(rho: &DensityOp, labels: &[usize], tol: f64) -> Result<BipartitionReport> {
    let m = rho.num_parties();
    if m < 2 {
        return Err(Error::InvalidParties("bipartitions need at least two subsystems".into()));
    }
    if m > MAX_PARTIES {
        return Err(Error::InvalidParties(format!("{m} subsystems exceed the limit of {MAX_PARTIES}")));
    }
    if labels.len() != m {
        return Err(Error::InvalidParties(format!("{} labels for {m} subsystems", labels.len())));
    }
    // Masks never contain the last subsystem, so each cut appears once.
    let cuts: Vec<Result<CutVerdict>> = (1u32..(1 << (m - 1)))
        .into_par_iter()
        .map(|mask| {
            let left: Vec<usize> = (0..m).filter(|&k| mask & (1 << k) != 0).collect();
            let right: Vec<usize> = (0..m).filter(|&k| mask & (1 << k) == 0).collect();
            let pt = partial_transpose(rho, &left)?;
            let chk = linalg::is_psd(&pt, tol)?;
            Ok(CutVerdict {
                left: left.iter().map(|&k| labels[k]).collect(),
                right: right.iter().map(|&k| labels[k]).collect(),
                status: Status::from_bool(chk.is_psd),
                min_eigenvalue: chk.min_eigenvalue,
            })
        })
        .collect();
    let cuts = cuts.into_iter().collect::<Result<Vec<_>>>()?;
    let overall = Status::from_bool(cuts.iter().all(|c| c.status == Status::Holds));
    Ok(BipartitionReport {
        labels: labels.to_vec(),
        cuts,
        overall,
    })
}

/// `(|10…0⟩ + |01…0⟩ + … + |0…01⟩)/√N`.
pub fn w_state(n: usize) -> Result<PureState> {
    if !(2..=MAX_PARTIES).contains(&n) {
        return Err(Error::InvalidParameters(format!("W state needs 2 ≤ N ≤ {MAX_PARTIES}, got {n}")));
    }
    let mut amps = vec![r(0.0); 1 << n];
    for k in 0..n {
        amps[1 << k] = r(1.0);
    }
    PureState::from_unnormalized(vec![2; n], amps)
}

/// `Σ_i √p_i |a_i⟩_1 … |a_i⟩_n ⊗ |b_{i,n+1}⟩ ⊗ … ⊗ |b_{i,N}⟩`, with the
/// `a`-vectors orthonormal per party.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GhzForm {
    pub n: usize,
    pub p: Vec<f64>,
    /// `factors[j][i]` is the vector of term `i` on party `j`; parties
    /// `0..n` hold orthonormal bases.
    pub factors: Vec<Vec<Vec<C64>>>,
    pub reconstruction_error: f64,
}

impl GhzForm {
    pub fn shared_bases(&self) -> &[Vec<Vec<C64>>] {
        &self.factors[..self.n]
    }

    pub fn reconstruct(&self, dims: &[usize]) -> Result<PureState> {
        let total: usize = dims.iter().product();
        let mut amps = vec![r(0.0); total];
        for (i, &p) in self.p.iter().enumerate() {
            let term = self
                .factors
                .iter()
                .fold(vec![r(p.sqrt())], |acc, party| linalg::kron_vec(&acc, &party[i]));
            for (a, t) in amps.iter_mut().zip(term) {
                *a += t;
            }
        }
        PureState::from_unnormalized(dims.to_vec(), amps)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum GhzDetection {
    Found(GhzForm),
    NotFound(String),
    /// Equal weights left the shared basis ambiguous and the tried bases
    /// did not verify.
    Degenerate,
}

impl GhzDetection {
    pub fn form(&self) -> Option<&GhzForm> {
        match self {
            GhzDetection::Found(f) => Some(f),
            _ => None,
        }
    }

    pub fn status(&self) -> Status {
        match self {
            GhzDetection::Found(_) => Status::Holds,
            GhzDetection::NotFound(_) => Status::Fails,
            GhzDetection::Degenerate => Status::Unknown,
        }
    }
}

/// Candidate basis on party 0 from the Schmidt form on parties `(0, 1)`
/// after contracting everything else with a random vector. For states of
/// the GHZ form the contracted coefficients are generically distinct, which
/// pins the basis down even when the weights are equal.
fn candidate_basis(psi: &PureState, attempt: u64, tol: f64) -> Result<Option<(Vec<Vec<C64>>, bool)>> {
    let dims = psi.dims();
    let (d0, d1) = (dims[0], dims[1]);
    let rest: usize = dims[2..].iter().product();
    let pair = if rest == 1 {
        psi.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6768_7a00 + attempt);
        let w = random_unit_vector(rest, &mut rng);
        let amps = psi.amps();
        let mut m = vec![r(0.0); d0 * d1];
        for (k, slot) in m.iter_mut().enumerate() {
            *slot = (0..rest).map(|t| w[t].conj() * amps[k * rest + t]).sum();
        }
        match PureState::from_unnormalized(vec![d0, d1], m) {
            Ok(s) => s,
            Err(_) => return Ok(None),
        }
    };
    let sf = schmidt(&pair, &[0], tol)?;
    let top = sf.coefficients.first().copied().unwrap_or(0.0);
    let degenerate = rest > 1 && sf.coefficients.windows(2).any(|w| (w[0] - w[1]) <= DEGENERACY_GAP * top);
    Ok(Some((sf.left_basis, degenerate)))
}

/// Contracts party 0 with `⟨a|`.
fn conditional(psi: &PureState, a: &[C64]) -> Vec<C64> {
    let d0 = psi.dims()[0];
    let rest = psi.amps().len() / d0;
    let amps = psi.amps();
    (0..rest)
        .map(|t| (0..d0).map(|i| a[i].conj() * amps[i * rest + t]).sum())
        .collect()
}

/// Factors a product vector over `dims`; `None` if it is entangled.
fn product_factors(v: &[C64], dims: &[usize], tol: f64) -> Result<Option<Vec<Vec<C64>>>> {
    if dims.len() == 1 {
        return Ok(Some(vec![linalg::normalized(v)]));
    }
    let s = PureState::from_unnormalized(dims.to_vec(), v.to_vec())?;
    let mut factors = Vec::with_capacity(dims.len());
    for j in 0..dims.len() {
        let rho = reduce(&s, &[j])?;
        let es = rho.eigen()?;
        if es.rank(tol) != 1 {
            return Ok(None);
        }
        factors.push(es.vector(dims[j] - 1));
    }
    Ok(Some(factors))
}

fn try_basis(psi: &PureState, n: usize, basis: &[Vec<C64>], tol: f64) -> Result<std::result::Result<GhzForm, String>> {
    let dims = psi.dims();
    let big_n = dims.len();
    let mut p = Vec::with_capacity(basis.len());
    let mut factors: Vec<Vec<Vec<C64>>> = vec![Vec::new(); big_n];
    for a in basis {
        let phi = conditional(psi, a);
        let weight = linalg::norm(&phi).powi(2);
        let Some(mut f) = product_factors(&phi, &dims[1..], tol)? else {
            return Ok(Err("a branch of party 0 is entangled across the other parties".into()));
        };
        // Put the overall phase of the branch on the first factor.
        let prod = f.iter().skip(1).fold(f[0].clone(), |acc, v| linalg::kron_vec(&acc, v));
        let overlap = linalg::inner(&prod, &phi);
        let phase = overlap / overlap.norm();
        for z in f[0].iter_mut() {
            *z *= phase;
        }
        p.push(weight);
        factors[0].push(a.clone());
        for (j, v) in f.into_iter().enumerate() {
            factors[j + 1].push(v);
        }
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > RECONSTRUCT_TOL {
        return Ok(Err(format!("branches carry weight {total:.3e}, not 1")));
    }
    for (j, party) in factors.iter().enumerate().take(n).skip(1) {
        let g = linalg::gram(party);
        for i in 0..party.len() {
            for k in 0..i {
                if g[(i, k)].norm() > ORTHO_TOL {
                    return Ok(Err(format!(
                        "party {j} factors {k} and {i} overlap by {:.3e}",
                        g[(i, k)].norm()
                    )));
                }
            }
        }
    }
    let mut form = GhzForm {
        n,
        p,
        factors,
        reconstruction_error: 0.0,
    };
    let rebuilt = form.reconstruct(dims)?;
    let err = rebuilt
        .amps()
        .iter()
        .zip(psi.amps())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    form.reconstruction_error = err;
    if err > RECONSTRUCT_TOL {
        return Ok(Err(format!("reconstruction error {err:.3e}")));
    }
    Ok(Ok(form))
}

/// Looks for the form `Σ_i √p_i |i⟩^{⊗n} ⊗ |b_{i,n+1}⟩ ⊗ … ⊗ |b_{i,N}⟩` up to
/// local unitaries, with the shared parties being the first `n`.
pub fn detect_generalized_ghz(psi: &PureState, n: usize, tol: f64) -> Result<GhzDetection> {
    let big_n = psi.num_parties();
    if big_n < 2 || !(2..=big_n).contains(&n) {
        return Err(Error::InvalidParameters(format!("need 2 ≤ n ≤ N, got n = {n}, N = {big_n}")));
    }
    let rank0 = psi.local_rank(0, tol)?;
    let mut last = None;
    for attempt in 0..CONTRACTION_ATTEMPTS {
        let Some((basis, degenerate)) = candidate_basis(psi, attempt, tol)? else {
            continue;
        };
        if basis.len() != rank0 {
            // The contraction annihilated a branch; try another vector.
            continue;
        }
        if degenerate {
            last = Some(basis);
            continue;
        }
        return Ok(match try_basis(psi, n, &basis, tol)? {
            Ok(form) => GhzDetection::Found(form),
            Err(why) => GhzDetection::NotFound(why),
        });
    }
    match last {
        Some(basis) => Ok(match try_basis(psi, n, &basis, tol)? {
            Ok(form) => GhzDetection::Found(form),
            Err(_) => GhzDetection::Degenerate,
        }),
        None => Ok(GhzDetection::NotFound("no contraction kept every branch".into())),
    }
}

/// Full separability when the operator is diagonal in a product basis: the
/// computational one, or the eigenbases of non-degenerate marginals.
pub fn product_diagonal(rho: &DensityOp, tol: f64) -> Result<bool> {
    let off = |m: &CMatrix| {
        let n = m.rows();
        (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm())
            .fold(0.0, f64::max)
    };
    if off(rho.matrix()) <= DIAGONAL_TOL {
        return Ok(true);
    }
    let mut u = CMatrix::identity(1);
    for j in 0..rho.num_parties() {
        let es = rho.partial_trace(&[j])?.eigen()?;
        let cut = es.rank_cutoff(tol);
        let support: Vec<f64> = es.eigenvalues.iter().copied().filter(|&l| l > cut).collect();
        if support.windows(2).any(|w| (w[1] - w[0]) <= DEGENERACY_GAP) {
            return Ok(false);
        }
        u = u.kron(&es.vectors);
    }
    Ok(off(&rho.matrix().conjugate_by(&u.adjoint())) <= DIAGONAL_TOL)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReducedCheck {
    /// The party traced out.
    pub removed: usize,
    pub bipartitions: BipartitionReport,
    pub fully_separable: Status,
    pub separability_reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GhzEquivalenceReport {
    pub parties: usize,
    pub n: usize,
    pub reduced: Vec<ReducedCheck>,
    /// Only its PPT sufficient condition is testable, so it mirrors
    /// `all_ppt` when that holds and is otherwise Unknown.
    pub non_distillable: Status,
    pub all_ppt: Status,
    pub fully_separable: Status,
    pub ghz_form: Status,
    pub detection: GhzDetection,
    pub disagreements: Vec<String>,
}

impl GhzEquivalenceReport {
    pub fn statuses(&self) -> [Status; 3] {
        [self.all_ppt, self.fully_separable, self.ghz_form]
    }

    pub fn consistent(&self) -> bool {
        self.disagreements.is_empty()
    }
}

fn combine(statuses: impl IntoIterator<Item = Status>) -> Status {
    let mut all_hold = true;
    for s in statuses {
        match s {
            Status::Fails => return Status::Fails,
            Status::Unknown => all_hold = false,
            Status::Holds => {}
        }
    }
    if all_hold {
        Status::Holds
    } else {
        Status::Unknown
    }
}

/// Evaluates the PPT, full-separability and GHZ-form statements for the reductions that drop one
/// of the first `n` parties, and records any disagreement among the
/// decided ones.
pub fn verify_ghz_equivalence(psi: &PureState, n: usize, tol: f64) -> Result<GhzEquivalenceReport> {
    let big_n = psi.num_parties();
    if !(3..=MAX_PARTIES).contains(&big_n) {
        return Err(Error::InvalidParties(format!("need 3 ≤ N ≤ {MAX_PARTIES} parties, got {big_n}")));
    }
    if !(2..=big_n).contains(&n) {
        return Err(Error::InvalidParameters(format!("need 2 ≤ n ≤ N, got n = {n}")));
    }
    let detection = detect_generalized_ghz(psi, n, tol)?;
    let certified = detection.form().is_some();
    let mut reduced = Vec::with_capacity(n);
    for i in 0..n {
        let keep: Vec<usize> = (0..big_n).filter(|&k| k != i).collect();
        let rho = reduce(psi, &keep)?;
        let bipartitions = check_all_bipartitions_ppt_labelled(&rho, &keep, tol)?;
        let (fully_separable, separability_reason) = if bipartitions.overall == Status::Fails {
            (Status::Fails, "a cut has a non-positive partial transpose".to_string())
        } else if product_diagonal(&rho, tol)? {
            (Status::Holds, "diagonal in a product basis".to_string())
        } else if certified {
            (Status::Holds, "follows from the detected GHZ form".to_string())
        } else {
            (Status::Unknown, "no decidable rule applies".to_string())
        };
        reduced.push(ReducedCheck {
            removed: i,
            bipartitions,
            fully_separable,
            separability_reason,
        });
    }
    let all_ppt = combine(reduced.iter().map(|c| c.bipartitions.overall));
    let fully_separable = combine(reduced.iter().map(|c| c.fully_separable));
    let ghz_form = detection.status();
    let non_distillable = if all_ppt == Status::Holds {
        Status::Holds
    } else {
        Status::Unknown
    };
    let named = [("all-PPT", all_ppt), ("fully-separable", fully_separable), ("GHZ-form", ghz_form)];
    let mut disagreements = Vec::new();
    for (k, &(a, sa)) in named.iter().enumerate() {
        for &(b, sb) in &named[k + 1..] {
            if sa.is_decided() && sb.is_decided() && sa != sb {
                disagreements.push(format!("{a} is {sa:?} but {b} is {sb:?}"));
            }
        }
    }
    Ok(GhzEquivalenceReport {
        parties: big_n,
        n,
        reduced,
        non_distillable,
        all_ppt,
        fully_separable,
        ghz_form,
        detection,
        disagreements,
    })
}

/// Largest `n` for which the GHZ form is detected, if any.
pub fn max_ghz_order(psi: &PureState, tol: f64) -> Result<Option<usize>> {
    for n in (2..=psi.num_parties()).rev() {
        if detect_generalized_ghz(psi, n, tol)?.form().is_some() {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// `Σ_i √p_i |i⟩^{⊗n} ⊗ |b_{i,n+1}⟩ ⊗ … ⊗ |b_{i,N}⟩` with `tails[i]` the
/// tail vectors of term `i`.
pub fn ghz_form_state(p: &[f64], d: usize, n: usize, tails: &[Vec<Vec<C64>>]) -> Result<PureState> {
    if p.len() > d || p.len() != tails.len() || n < 2 {
        return Err(Error::InvalidParameters("inconsistent GHZ-form parameters".into()));
    }
    let tail_dims: Vec<usize> = tails[0].iter().map(Vec::len).collect();
    if tails.iter().any(|t| t.iter().map(Vec::len).collect::<Vec<_>>() != tail_dims) {
        return Err(Error::InvalidParameters("tail vectors disagree in shape".into()));
    }
    let mut dims = vec![d; n];
    dims.extend(&tail_dims);
    let mut amps = vec![r(0.0); dims.iter().product()];
    for (i, (&w, tail)) in p.iter().zip(tails).enumerate() {
        let e = linalg::basis_vector(d, i);
        let head = (0..n).fold(vec![r(w.sqrt())], |acc, _| linalg::kron_vec(&acc, &e));
        let term = tail.iter().fold(head, |acc, v| linalg::kron_vec(&acc, &linalg::normalized(v)));
        for (a, t) in amps.iter_mut().zip(term) {
            *a += t;
        }
    }
    PureState::from_unnormalized(dims, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_family, Family};
    use crate::linalg::{c, DEFAULT_TOL};
    use crate::sampling::{random_pure_state, random_unitary};

    fn ghz(n: usize, d: usize) -> PureState {
        make_family(&Family::GhzN { n, d }).unwrap().0
    }

    #[test]
    fn cut_count_and_classical_state() {
        let rho = reduce(&ghz(4, 2), &[0, 1, 2]).unwrap();
        let rep = check_all_bipartitions_ppt(&rho, DEFAULT_TOL).unwrap();
        assert_eq!(rep.cuts.len(), 3);
        assert_eq!(rep.overall, Status::Holds);
        let rho = ghz(5, 2).density();
        assert_eq!(check_all_bipartitions_ppt(&rho, DEFAULT_TOL).unwrap().cuts.len(), 15);
    }

    #[test]
    fn w_pair_is_npt() {
        let rho = reduce(&w_state(3).unwrap(), &[0, 1]).unwrap();
        let rep = check_all_bipartitions_ppt(&rho, DEFAULT_TOL).unwrap();
        assert_eq!(rep.overall, Status::Fails);
        assert!(rep.cuts[0].min_eigenvalue < -1e-3);
    }

    #[test]
    fn bell_with_spectator() {
        let psi = PureState::from_terms(vec![2, 2, 2], &[(&[0, 0, 0], r(1.0)), (&[1, 1, 0], r(1.0))]).unwrap();
        let rep = check_all_bipartitions_ppt(&psi.density(), DEFAULT_TOL).unwrap();
        for cut in &rep.cuts {
            let isolates_spectator = cut.left == [0, 1] || cut.right == [2];
            assert_eq!(cut.status == Status::Holds, isolates_spectator, "{cut:?}");
        }
    }

    #[test]
    fn detects_ghz_with_equal_weights() {
        let psi = ghz(4, 2);
        let GhzDetection::Found(form) = detect_generalized_ghz(&psi, 4, DEFAULT_TOL).unwrap() else {
            panic!("GHZ not detected");
        };
        assert!(form.p.iter().all(|&p| (p - 0.5).abs() < 1e-10));
        assert!(form.reconstruction_error < 1e-10);
    }

    #[test]
    fn detects_ghz_after_local_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = ghz(3, 3);
        let us: Vec<CMatrix> = (0..3).map(|_| random_unitary(3, &mut rng)).collect();
        let rotated = psi.apply_local(&us).unwrap();
        assert!(detect_generalized_ghz(&rotated, 3, DEFAULT_TOL).unwrap().form().is_some());
    }

    #[test]
    fn nonorthogonal_tail_fixes_n() {
        let tails = vec![vec![vec![r(1.0), r(0.0)]], vec![vec![r(0.6), c(0.0, 0.8)]]];
        let psi = ghz_form_state(&[0.7, 0.3], 2, 2, &tails).unwrap();
        assert!(detect_generalized_ghz(&psi, 2, DEFAULT_TOL).unwrap().form().is_some());
        assert_eq!(detect_generalized_ghz(&psi, 3, DEFAULT_TOL).unwrap().status(), Status::Fails);
        assert_eq!(max_ghz_order(&psi, DEFAULT_TOL).unwrap(), Some(2));
    }

    #[test]
    fn w_is_not_ghz() {
        let w = w_state(3).unwrap();
        assert_eq!(detect_generalized_ghz(&w, 2, DEFAULT_TOL).unwrap().status(), Status::Fails);
        let rep = verify_ghz_equivalence(&w_state(4).unwrap(), 2, DEFAULT_TOL).unwrap();
        assert_eq!(rep.statuses(), [Status::Fails; 3]);
        assert!(rep.consistent());
    }

    #[test]
    fn ghz_passes_all_statements() {
        let rep = verify_ghz_equivalence(&ghz(5, 2), 5, DEFAULT_TOL).unwrap();
        assert_eq!(rep.statuses(), [Status::Holds; 3]);
        assert_eq!(rep.non_distillable, Status::Holds);
    }

    #[test]
    fn detection_matches_all_reductions_ppt() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut states = vec![ghz(3, 2), ghz(4, 3), w_state(3).unwrap()];
        states.extend((0..4).map(|_| random_pure_state(&[2, 2, 2], &mut rng)));
        for psi in states {
            let big_n = psi.num_parties();
            let detected = detect_generalized_ghz(&psi, big_n, DEFAULT_TOL).unwrap().form().is_some();
            let all_ppt = (0..big_n).all(|i| {
                let keep: Vec<usize> = (0..big_n).filter(|&k| k != i).collect();
                let rho = reduce(&psi, &keep).unwrap();
                check_all_bipartitions_ppt(&rho, DEFAULT_TOL).unwrap().overall == Status::Holds
            });
            assert_eq!(detected, all_ppt);
        }
    }
}
