//! Named constructions, each paired with a [`Certificate`] recording what
//! is known about it by construction.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::{ClassLabel, SeparabilityClaim};
use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix, C64, DEFAULT_TOL};
use crate::qstate::{self, purify, DensityOp, PureState};
use crate::sampling::{random_unit_vector, random_unitary};

pub const FAMILY_NAMES: &[&str] = &[
    "ghz",
    "gen_ghz",
    "mc_purification",
    "sss",
    "ssm",
    "smm",
    "pmm_tiles",
    "ddd_psi_r",
    "dmm_psi_a",
    "mmm_example1",
    "counterexample_232",
    "ghz_n",
    "lemma2_form",
];

/// Family name plus parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Ghz { d: usize },
    GenGhz { p: Vec<f64> },
    McPurification { c: CMatrix },
    Sss,
    Ssm { r: usize, seed: u64 },
    Smm { d: usize, seed: u64 },
    PmmTiles,
    DddPsiR { r: usize },
    DmmPsiA { a: f64 },
    #[serde(rename = "mmm_example1")]
    Mmm { r: usize },
    Counterexample232,
    GhzN { n: usize, d: usize },
    #[serde(rename = "lemma2_form")]
    TwoSeparable { p: Vec<f64>, b: Vec<Vec<C64>> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Ghz { .. } => "ghz",
            Family::GenGhz { .. } => "gen_ghz",
            Family::McPurification { .. } => "mc_purification",
            Family::Sss => "sss",
            Family::Ssm { .. } => "ssm",
            Family::Smm { .. } => "smm",
            Family::PmmTiles => "pmm_tiles",
            Family::DddPsiR { .. } => "ddd_psi_r",
            Family::DmmPsiA { .. } => "dmm_psi_a",
            Family::Mmm { .. } => "mmm_example1",
            Family::Counterexample232 => "counterexample_232",
            Family::GhzN { .. } => "ghz_n",
            Family::TwoSeparable { .. } => "lemma2_form",
        }
    }

    /// Parses positional command-line parameters.
    ///
    /// Lists are comma separated; matrices and vector lists separate rows
    /// with `;`. Missing trailing parameters take defaults.
    pub fn parse(name: &str, args: &[String]) -> Result<Family> {
        let arg = |k: usize| args.get(k).map(String::as_str);
        let int = |k: usize, default: usize| -> Result<usize> {
            match arg(k) {
                None => Ok(default),
                Some(s) => s.trim().parse().map_err(|_| bad_param(name, s)),
            }
        };
        let seed = |k: usize| -> Result<u64> {
            match arg(k) {
                None => Ok(0),
                Some(s) => s.trim().parse().map_err(|_| bad_param(name, s)),
            }
        };
        let list = |k: usize| -> Result<Vec<f64>> {
            let s = arg(k).ok_or_else(|| Error::InvalidParameters(format!("{name} needs a list parameter")))?;
            parse_list(s).ok_or_else(|| bad_param(name, s))
        };
        let fam = match name {
            "ghz" => Family::Ghz { d: int(0, 2)? },
            "gen_ghz" => Family::GenGhz { p: list(0)? },
            "mc_purification" => {
                let s = arg(0).ok_or_else(|| Error::InvalidParameters("mc_purification needs a matrix".into()))?;
                let rows = parse_rows(s).ok_or_else(|| bad_param(name, s))?;
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(bad_param(name, s));
                }
                Family::McPurification {
                    c: CMatrix::from_fn(n, n, |i, j| r(rows[i][j])),
                }
            }
            "sss" => Family::Sss,
            "ssm" => Family::Ssm { r: int(0, 3)?, seed: seed(1)? },
            "smm" => Family::Smm { d: int(0, 3)?, seed: seed(1)? },
            "pmm_tiles" => Family::PmmTiles,
            "ddd_psi_r" => Family::DddPsiR { r: int(0, 4)? },
            "dmm_psi_a" => {
                let a = match arg(0) {
                    None => 1.0,
                    Some(s) => s.trim().parse().map_err(|_| bad_param(name, s))?,
                };
                Family::DmmPsiA { a }
            }
            "mmm_example1" => Family::Mmm { r: int(0, 4)? },
            "counterexample_232" => Family::Counterexample232,
            "ghz_n" => Family::GhzN { n: int(0, 4)?, d: int(1, 2)? },
            "lemma2_form" => {
                let p = list(0)?;
                let s = arg(1).ok_or_else(|| Error::InvalidParameters("lemma2_form needs b-vectors".into()))?;
                let rows = parse_rows(s).ok_or_else(|| bad_param(name, s))?;
                Family::TwoSeparable {
                    p,
                    b: rows.into_iter().map(|v| v.into_iter().map(r).collect()).collect(),
                }
            }
            _ => {
                return Err(Error::UnknownFamily {
                    name: name.to_string(),
                    available: FAMILY_NAMES.join(", "),
                })
            }
        };
        Ok(fam)
    }
}

fn bad_param(name: &str, s: &str) -> Error {
    Error::InvalidParameters(format!("cannot parse `{s}` as a parameter of {name}"))
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse().ok()).collect()
}

fn parse_rows(s: &str) -> Option<Vec<Vec<f64>>> {
    s.split(';').map(parse_list).collect()
}

/// Ground truth attached to a constructed state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub family: String,
    pub params: serde_json::Value,
    /// `(X_AB, X_BC, X_CA)` for tripartite families.
    pub claimed: Option<[ClassLabel; 3]>,
    /// Size of an explicit product decomposition, if known.
    pub rank_upper: Option<usize>,
    /// Claims about `(AB, BC, CA)` that the numerics cannot decide.
    pub separability: [Option<SeparabilityClaim>; 3],
    pub provenance: String,
}

impl Certificate {
    fn new(fam: &Family, claimed: Option<[ClassLabel; 3]>, rank_upper: Option<usize>, provenance: &str) -> Self {
        Self {
            family: fam.name().to_string(),
            params: serde_json::to_value(fam).unwrap_or(serde_json::Value::Null),
            claimed,
            rank_upper,
            separability: [None, None, None],
            provenance: provenance.to_string(),
        }
    }

    pub fn claimed_string(&self) -> String {
        match &self.claimed {
            Some(t) => t.iter().map(|l| l.letter()).collect(),
            None => "-".into(),
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} claims S_{}", self.family, self.claimed_string())?;
        if let Some(u) = self.rank_upper {
            write!(f, ", tensor rank ≤ {u}")?;
        }
        write!(f, " ({})", self.provenance)
    }
}

fn terms_state(dims: Vec<usize>, terms: &[(Vec<usize>, C64)]) -> Result<PureState> {
    let refs: Vec<(&[usize], C64)> = terms.iter().map(|(i, a)| (i.as_slice(), *a)).collect();
    PureState::from_terms(dims, &refs)
}

fn validate_probabilities(p: &[f64]) -> Result<Vec<f64>> {
    if p.is_empty() || p.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(Error::InvalidParameters(format!("weights {p:?} must be positive")));
    }
    let s: f64 = p.iter().sum();
    Ok(p.iter().map(|x| x / s).collect())
}

/// `Σ_i √p_i |b_i, i, i⟩` with `b_i` on party A.
pub fn two_separable_state(p: &[f64], b: &[Vec<C64>]) -> Result<PureState> {
    let p = validate_probabilities(p)?;
    if b.len() != p.len() {
        return Err(Error::InvalidParameters(format!("{} weights but {} vectors", p.len(), b.len())));
    }
    let da = b[0].len();
    if da == 0 || b.iter().any(|v| v.len() != da || linalg::norm(v) < 1e-12) {
        return Err(Error::InvalidParameters("b-vectors must be nonzero and of equal length".into()));
    }
    let n = p.len();
    let mut amps = vec![r(0.0); da * n * n];
    for (i, (pi, bi)) in p.iter().zip(b).enumerate() {
        let bi = linalg::normalized(bi);
        for a in 0..da {
            amps[a * n * n + i * n + i] = bi[a] * pi.sqrt();
        }
    }
    PureState::from_unnormalized(vec![da, n, n], amps)
}

fn any_overlap(b: &[Vec<C64>]) -> bool {
    let nb: Vec<Vec<C64>> = b.iter().map(|v| linalg::normalized(v)).collect();
    let g = linalg::gram(&nb);
    (0..nb.len()).any(|i| (0..nb.len()).any(|j| i != j && g[(i, j)].norm() > 1e-8))
}

/// Seeded random unit vectors.
pub fn seeded_vectors(count: usize, dim: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_unit_vector(dim, &mut rng)).collect()
}

/// Five orthogonal product vectors on 3×3 forming the tiles UPB, as
/// `(A factor, B factor)` pairs.
pub fn tiles_vectors() -> Vec<(Vec<C64>, Vec<C64>)> {
    let s = 0.5f64.sqrt();
    let t = 1.0 / 3.0f64.sqrt();
    let e = |k: usize| linalg::basis_vector(3, k);
    let diff = |i: usize, j: usize| {
        let mut v = vec![r(0.0); 3];
        v[i] = r(s);
        v[j] = r(-s);
        v
    };
    vec![
        (e(0), diff(0, 1)),
        (diff(0, 1), e(2)),
        (e(2), diff(1, 2)),
        (diff(1, 2), e(0)),
        (vec![r(t); 3], vec![r(t); 3]),
    ]
}

/// The tiles vectors and `ρ = (I − Σ|v_i⟩⟨v_i|)/4`.
pub fn tiles_upb() -> Result<(Vec<(Vec<C64>, Vec<C64>)>, DensityOp)> {
    let vs = tiles_vectors();
    let mut m = CMatrix::identity(9);
    for (a, b) in &vs {
        m = &m - &CMatrix::projector(&linalg::kron_vec(a, b));
    }
    let rho = DensityOp::new(vec![3, 3], m.scale_real(0.25), DEFAULT_TOL)?;
    Ok((vs, rho))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpbReport {
    pub count: usize,
    pub max_overlap: f64,
    pub orthogonal: bool,
    /// Smallest `Σ_i |⟨a_i|a⟩⟨b_i|b⟩|²` found over all starts.
    pub best_residual: f64,
    pub starts: usize,
    pub extension: Option<(Vec<C64>, Vec<C64>)>,
}

impl UpbReport {
    /// Heuristic unextendibility: no start got within `1e-6`.
    pub fn looks_unextendible(&self) -> bool {
        self.orthogonal && self.best_residual > 1e-6
    }
}

/// Splits a vector on `da × db` into product factors; errors if it is not
/// a product.
pub fn factor_product(v: &[C64], da: usize, db: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    let psi = PureState::from_unnormalized(vec![da, db], v.to_vec())?;
    let s = qstate::schmidt(&psi, &[0], DEFAULT_TOL)?;
    if s.rank() != 1 {
        return Err(Error::InvalidParameters(format!(
            "vector has Schmidt rank {}, not a product",
            s.rank()
        )));
    }
    Ok((s.left_basis[0].clone(), s.right_basis[0].clone()))
}

fn min_eigvec(m: &CMatrix) -> Result<Vec<C64>> {
    Ok(linalg::eig_hermitian(&m.hermitian_part())?.vector(0))
}

fn weighted_projector_sum(vs: &[&Vec<C64>], weights: &[f64]) -> CMatrix {
    let d = vs[0].len();
    let mut m = CMatrix::zeros(d, d);
    for (v, w) in vs.iter().zip(weights) {
        m = &m + &CMatrix::projector(v).scale_real(*w);
    }
    m
}

/// Orthogonality check plus a multi-start alternating minimization for a
/// product vector orthogonal to every input.
pub fn verify_upb(vectors: &[Vec<C64>], da: usize, db: usize, starts: usize, seed: u64) -> Result<UpbReport> {
    let factors: Vec<(Vec<C64>, Vec<C64>)> = vectors
        .iter()
        .map(|v| factor_product(v, da, db))
        .collect::<Result<_>>()?;
    let normed: Vec<Vec<C64>> = vectors.iter().map(|v| linalg::normalized(v)).collect();
    let g = linalg::gram(&normed);
    let mut max_overlap = 0.0f64;
    for i in 0..normed.len() {
        for j in 0..normed.len() {
            if i != j {
                max_overlap = max_overlap.max(g[(i, j)].norm());
            }
        }
    }
    let a_list: Vec<&Vec<C64>> = factors.iter().map(|f| &f.0).collect();
    let b_list: Vec<&Vec<C64>> = factors.iter().map(|f| &f.1).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let mut extension = None;
    for _ in 0..starts {
        let mut b = random_unit_vector(db, &mut rng);
        let mut a = random_unit_vector(da, &mut rng);
        let mut res = f64::INFINITY;
        for _ in 0..300 {
            let wa: Vec<f64> = b_list.iter().map(|bi| linalg::inner(bi, &b).norm_sqr()).collect();
            a = min_eigvec(&weighted_projector_sum(&a_list, &wa))?;
            let wb: Vec<f64> = a_list.iter().map(|ai| linalg::inner(ai, &a).norm_sqr()).collect();
            b = min_eigvec(&weighted_projector_sum(&b_list, &wb))?;
            let new_res: f64 = factors
                .iter()
                .map(|(ai, bi)| (linalg::inner(ai, &a) * linalg::inner(bi, &b)).norm_sqr())
                .sum();
            let stalled = res - new_res < 1e-15;
            res = new_res;
            if res < 1e-20 || stalled {
                break;
            }
        }
        if res < best {
            best = res;
            if res <= 1e-9 {
                extension = Some((a.clone(), b.clone()));
                break;
            }
        }
    }
    Ok(UpbReport {
        count: vectors.len(),
        max_overlap,
        orthogonal: max_overlap <= 1e-12,
        best_residual: best,
        starts,
        extension,
    })
}

/// `T = Σ_{σ ∈ S₃} |σ(0) σ(1) σ(2)⟩` as four symmetric cubes:
/// `¼(v₁^{⊗3} − v₂^{⊗3} − v₃^{⊗3} − v₄^{⊗3})`.
pub fn symmetric_cube_terms(dim: usize) -> Vec<(f64, Vec<C64>)> {
    let v = |s: [f64; 3]| {
        let mut out = vec![r(0.0); dim];
        for k in 0..3 {
            out[k] = r(s[k]);
        }
        out
    };
    vec![
        (0.25, v([1.0, 1.0, 1.0])),
        (-0.25, v([1.0, 1.0, -1.0])),
        (-0.25, v([1.0, -1.0, 1.0])),
        (-0.25, v([-1.0, 1.0, 1.0])),
    ]
}

fn psi_r(rdim: usize) -> Result<PureState> {
    let w = (1.0 / (2.0 * rdim as f64)).sqrt();
    let mut terms: Vec<(Vec<usize>, C64)> = [[2, 0, 1], [0, 1, 2], [1, 2, 0], [1, 0, 2], [0, 2, 1], [2, 1, 0]]
        .iter()
        .map(|p| (p.to_vec(), r(w)))
        .collect();
    for j in 3..rdim {
        terms.push((vec![j, j, j], r(1.0 / (rdim as f64).sqrt())));
    }
    terms_state(vec![rdim; 3], &terms)
}

fn psi_a(a: f64) -> Result<PureState> {
    let terms = vec![
        (vec![0, 1, 2], r(1.0)),
        (vec![1, 2, 0], r(1.0)),
        (vec![2, 0, 1], r(1.0)),
        (vec![1, 0, 2], r(1.0)),
        (vec![1, 0, 5], r(a)),
        (vec![0, 2, 1], r(1.0)),
        (vec![0, 2, 4], r(a)),
        (vec![2, 1, 0], r(1.0)),
        (vec![2, 1, 3], r(a)),
    ];
    terms_state(vec![3, 3, 6], &terms)
}

/// Squared norm of the unnormalized sum in the reduction-violating
/// symmetric example: `(r−1)` diagonal terms, 8 from the cube, and 2 from
/// its overlap with `|111⟩`.
pub fn mmm_unnormalized_norm_sqr(rdim: usize) -> f64 {
    (rdim - 1) as f64 + 8.0 + 2.0
}

fn mmm_unnormalized(rdim: usize) -> Vec<C64> {
    let mut amps = vec![r(0.0); rdim * rdim * rdim];
    for i in 1..rdim {
        amps[i * rdim * rdim + i * rdim + i] += r(1.0);
    }
    for x in 0..2 {
        for y in 0..2 {
            for z in 0..2 {
                amps[x * rdim * rdim + y * rdim + z] += r(1.0);
            }
        }
    }
    amps
}

fn ghz_state(dims: Vec<usize>, p: &[f64]) -> Result<PureState> {
    let n = dims.len();
    let terms: Vec<(Vec<usize>, C64)> = p.iter().enumerate().map(|(i, &pi)| (vec![i; n], r(pi.sqrt()))).collect();
    terms_state(dims, &terms)
}

fn ssm_state(rdim: usize, seed: u64) -> Result<PureState> {
    let p: Vec<f64> = (1..=rdim).map(|i| i as f64).collect();
    let b = seeded_vectors(rdim, rdim, seed);
    // Σ √p_i |i, b_i, i⟩ is the A-side form with A and B swapped.
    two_separable_state(&p, &b)?.permute_parties(&[1, 0, 2])
}

fn smm_state(d: usize, seed: u64) -> Result<PureState> {
    let p = validate_probabilities(&(1..=d).map(|i| i as f64).collect::<Vec<_>>())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<Vec<C64>> = (0..d).map(|_| random_unit_vector(d, &mut rng)).collect();
    let b: Vec<Vec<C64>> = (0..d).map(|_| random_unit_vector(d, &mut rng)).collect();
    // |c_i⟩ are the columns of a seeded unitary: independent and spanning C.
    let u = random_unitary(d, &mut rng);
    let mut amps = vec![r(0.0); d * d * d];
    for i in 0..d {
        let c = u.column(i);
        for x in 0..d {
            for y in 0..d {
                for z in 0..d {
                    amps[x * d * d + y * d + z] += a[i][x] * b[i][y] * c[z] * p[i].sqrt();
                }
            }
        }
    }
    PureState::from_unnormalized(vec![d; 3], amps)
}

/// Builds a family member and its certificate.
pub fn make_family(fam: &Family) -> Result<(PureState, Certificate)> {
    use ClassLabel::*;
    let out = match fam {
        Family::Ghz { d } => {
            if *d < 2 {
                return Err(Error::InvalidParameters("ghz needs d ≥ 2".into()));
            }
            let psi = ghz_state(vec![*d; 3], &vec![1.0 / *d as f64; *d])?;
            (psi, Certificate::new(fam, Some([S, S, S]), Some(*d), "GHZ state, all pairs classically correlated"))
        }
        Family::GenGhz { p } => {
            let p = validate_probabilities(p)?;
            let n = p.len();
            let psi = ghz_state(vec![n; 3], &p)?;
            (psi, Certificate::new(fam, Some([S, S, S]), Some(n), "generalized GHZ, Σ √p_i |iii⟩"))
        }
        Family::Sss => {
            let psi = ghz_state(vec![3; 3], &[0.5, 1.0 / 3.0, 1.0 / 6.0])?;
            (psi, Certificate::new(fam, Some([S, S, S]), Some(3), "generalized GHZ with p = (1/2, 1/3, 1/6)"))
        }
        Family::McPurification { c } => {
            let n = c.rows();
            if !c.is_square() || n < 1 {
                return Err(Error::InvalidParameters("coefficient matrix must be square".into()));
            }
            let rho = DensityOp::from_unnormalized(vec![n], c.clone(), DEFAULT_TOL)?;
            let es = rho.eigen()?;
            let support = es.support_desc(DEFAULT_TOL);
            // β_i[k] = √λ_k u_k[i] gives ⟨β_j|β_i⟩ = c_ij.
            let b: Vec<Vec<C64>> = (0..n)
                .map(|i| support.iter().map(|&k| es.vectors[(i, k)] * es.eigenvalues[k].sqrt()).collect())
                .collect();
            let p: Vec<f64> = b.iter().map(|v| linalg::norm(v).powi(2)).collect();
            if p.iter().any(|&x| x <= 1e-12) {
                return Err(Error::InvalidParameters("coefficient matrix has a zero diagonal entry".into()));
            }
            let psi = two_separable_state(&p, &b)?;
            let offdiag = (0..n).any(|i| (0..n).any(|j| i != j && rho.matrix()[(i, j)].norm() > 1e-8));
            let bc = if offdiag { M } else { S };
            (psi, Certificate::new(fam, Some([S, bc, S]), Some(n), "purification with maximally correlated BC pair"))
        }
        Family::Ssm { r: rdim, seed } => {
            if *rdim < 2 {
                return Err(Error::InvalidParameters("ssm needs r ≥ 2".into()));
            }
            let psi = ssm_state(*rdim, *seed)?;
            (psi, Certificate::new(fam, Some([S, S, M]), Some(*rdim), "Σ √p_i |i, b_i, i⟩ with seeded non-orthogonal b_i"))
        }
        Family::Smm { d, seed } => {
            if *d < 2 {
                return Err(Error::InvalidParameters("smm needs d ≥ 2".into()));
            }
            let psi = smm_state(*d, *seed)?;
            (psi, Certificate::new(fam, Some([S, M, M]), Some(*d), "Σ √p_i |a_i, b_i, c_i⟩ with seeded vectors, independent c_i"))
        }
        Family::PmmTiles => {
            let (_, rho) = tiles_upb()?;
            let psi = purify(&rho, DEFAULT_TOL)?;
            let mut cert = Certificate::new(fam, Some([P, M, M]), None, "purification of the tiles bound entangled state");
            cert.separability[0] = Some(SeparabilityClaim {
                separable: false,
                note: "entangled by construction: complement of an unextendible product basis".into(),
            });
            (psi, cert)
        }
        Family::DddPsiR { r: rdim } => {
            if *rdim < 4 {
                return Err(Error::InvalidParameters(format!("ddd_psi_r needs r ≥ 4, got {rdim}")));
            }
            (psi_r(*rdim)?, Certificate::new(fam, Some([D, D, D]), Some(rdim + 1), "symmetric |123⟩ sum plus Σ_j |jjj⟩"))
        }
        Family::DmmPsiA { a } => {
            if !a.is_finite() || *a == 0.0 {
                return Err(Error::InvalidParameters(
                    "dmm_psi_a needs a finite a ≠ 0 (a = 0 collapses party C to dimension 3)".into(),
                ));
            }
            (psi_a(*a)?, Certificate::new(fam, Some([D, M, M]), Some(6), "3×3×6 state with r = d_C > d_A = d_B"))
        }
        Family::Mmm { r: rdim } => {
            if *rdim < 2 {
                return Err(Error::InvalidParameters("mmm_example1 needs r ≥ 2".into()));
            }
            let amps = mmm_unnormalized(*rdim);
            let psi = PureState::from_unnormalized(vec![*rdim; 3], amps)?;
            (psi, Certificate::new(fam, Some([M, M, M]), Some(*rdim), "symmetric state, every pair violates reduction"))
        }
        Family::Counterexample232 => {
            let psi = terms_state(
                vec![2, 2, 2],
                &[(vec![0, 0, 0], r(1.0)), (vec![0, 1, 1], r(1.0)), (vec![1, 1, 1], r(1.0))],
            )?;
            (psi, Certificate::new(fam, Some([S, M, S]), Some(2), "|000⟩ + (|0⟩+|1⟩)|11⟩, normalized"))
        }
        Family::GhzN { n, d } => {
            if *n < 2 || *d < 2 {
                return Err(Error::InvalidParameters("ghz_n needs N ≥ 2 and d ≥ 2".into()));
            }
            if *n > 10 {
                return Err(Error::InvalidParameters("ghz_n is limited to N ≤ 10".into()));
            }
            let psi = ghz_state(vec![*d; *n], &vec![1.0 / *d as f64; *d])?;
            let claimed = (*n == 3).then_some([S, S, S]);
            (psi, Certificate::new(fam, claimed, Some(*d), "N-party GHZ state"))
        }
        Family::TwoSeparable { p, b } => {
            let psi = two_separable_state(p, b)?;
            let bc = if any_overlap(b) { M } else { S };
            (psi, Certificate::new(fam, Some([S, bc, S]), Some(p.len()), "Σ √p_i |b_i, i, i⟩"))
        }
    };
    Ok(out)
}

/// Random instance of the two-separable-pairs form on `n` terms with
/// A-dimension `da`.
pub fn random_two_separable<R: rand::Rng + ?Sized>(n: usize, da: usize, rng: &mut R) -> Result<PureState> {
    let p = crate::sampling::random_probabilities(n, rng);
    let b: Vec<Vec<C64>> = (0..n).map(|_| random_unit_vector(da, rng)).collect();
    two_separable_state(&p, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{check_ppt, Status};
    use crate::qstate::reduce;

    #[test]
    fn ghz_amplitudes() {
        let (psi, cert) = make_family(&Family::Ghz { d: 2 }).unwrap();
        let h = 0.5f64.sqrt();
        assert!((psi.amplitude(&[0, 0, 0]).re - h).abs() < 1e-15);
        assert!((psi.amplitude(&[1, 1, 1]).re - h).abs() < 1e-15);
        assert_eq!(cert.claimed_string(), "SSS");
    }

    #[test]
    fn counterexample_amplitudes() {
        let (psi, _) = make_family(&Family::Counterexample232).unwrap();
        let t = 1.0 / 3.0f64.sqrt();
        for idx in [[0, 0, 0], [0, 1, 1], [1, 1, 1]] {
            assert!((psi.amplitude(&idx).re - t).abs() < 1e-15);
        }
    }

    #[test]
    fn psi_a_shape_and_marginals() {
        let (psi, cert) = make_family(&Family::DmmPsiA { a: 1.0 }).unwrap();
        assert_eq!(psi.dims(), &[3, 3, 6]);
        assert_eq!(psi.local_ranks(DEFAULT_TOL).unwrap(), vec![3, 3, 6]);
        assert_eq!(cert.rank_upper, Some(6));
        let ra = reduce(&psi, &[0]).unwrap();
        assert!(ra.matrix().distance(&CMatrix::identity(3).scale_real(1.0 / 3.0)) < 1e-12);
        assert!(make_family(&Family::DmmPsiA { a: 0.0 }).is_err());
    }

    #[test]
    fn psi_r_decomposes_into_r_plus_one_products() {
        for rdim in 4..=6 {
            let (psi, cert) = make_family(&Family::DddPsiR { r: rdim }).unwrap();
            let mut amps = vec![r(0.0); rdim.pow(3)];
            let w = (1.0 / (2.0 * rdim as f64)).sqrt();
            let mut terms = 0;
            for (coef, v) in symmetric_cube_terms(rdim) {
                let cube = linalg::kron_vec(&linalg::kron_vec(&v, &v), &v);
                for (x, y) in amps.iter_mut().zip(&cube) {
                    *x += y * (coef * w);
                }
                terms += 1;
            }
            for j in 3..rdim {
                amps[j * rdim * rdim + j * rdim + j] += r(1.0 / (rdim as f64).sqrt());
                terms += 1;
            }
            assert_eq!(Some(terms), cert.rank_upper);
            let diff: f64 = amps.iter().zip(psi.amps()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12, "r = {rdim}: {diff}");
        }
        assert!(make_family(&Family::DddPsiR { r: 3 }).is_err());
    }

    #[test]
    fn mmm_norm_is_r_plus_nine() {
        for rdim in 2..7 {
            let n2: f64 = mmm_unnormalized(rdim).iter().map(|z| z.norm_sqr()).sum();
            assert!((n2 - mmm_unnormalized_norm_sqr(rdim)).abs() < 1e-12);
            assert!((n2 - (rdim as f64 + 9.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn tiles_structure() {
        let (vs, rho) = tiles_upb().unwrap();
        let flat: Vec<Vec<C64>> = vs.iter().map(|(a, b)| linalg::kron_vec(a, b)).collect();
        assert!(linalg::gram(&flat).distance(&CMatrix::identity(5)) < 1e-12);
        assert_eq!(check_ppt(&rho, DEFAULT_TOL).unwrap().status, Status::Holds);
        assert_eq!(rho.rank(DEFAULT_TOL).unwrap(), 4);
        assert_eq!(rho.partial_trace(&[0]).unwrap().rank(DEFAULT_TOL).unwrap(), 3);
        assert_eq!(rho.partial_trace(&[1]).unwrap().rank(DEFAULT_TOL).unwrap(), 3);
    }

    #[test]
    fn upb_search() {
        let vs: Vec<Vec<C64>> = tiles_vectors().iter().map(|(a, b)| linalg::kron_vec(a, b)).collect();
        let full = verify_upb(&vs, 3, 3, 200, 1).unwrap();
        assert!(full.orthogonal);
        assert!(full.looks_unextendible(), "residual {}", full.best_residual);
        let partial = verify_upb(&vs[..4], 3, 3, 200, 1).unwrap();
        assert!(partial.best_residual <= 1e-9);
        let single = verify_upb(&vs[..1], 3, 3, 10, 1).unwrap();
        assert!(single.extension.is_some());
        let bell = vec![r(0.5f64.sqrt()), r(0.0), r(0.0), r(0.5f64.sqrt())];
        assert!(verify_upb(&[bell], 2, 2, 10, 1).is_err());
    }

    #[test]
    fn parse_and_names() {
        assert_eq!(Family::parse("ghz", &["3".into()]).unwrap(), Family::Ghz { d: 3 });
        assert_eq!(Family::parse("dmm_psi_a", &["1.0".into()]).unwrap(), Family::DmmPsiA { a: 1.0 });
        match Family::parse("nope", &[]) {
            Err(Error::UnknownFamily { available, .. }) => assert!(available.contains("pmm_tiles")),
            other => panic!("{other:?}"),
        }
        let f = Family::parse("lemma2_form", &["0.5,0.5".into(), "1,0;1,1".into()]).unwrap();
        let (_, cert) = make_family(&f).unwrap();
        assert_eq!(cert.claimed_string(), "SMS");
        for name in FAMILY_NAMES {
            let args: Vec<String> = match *name {
                "gen_ghz" => vec!["0.6,0.4".into()],
                "mc_purification" => vec!["0.5,0.2;0.2,0.5".into()],
                "lemma2_form" => vec!["0.5,0.5".into(), "1,0;1,1".into()],
                _ => vec![],
            };
            let fam = Family::parse(name, &args).unwrap();
            assert_eq!(fam.name(), *name);
            make_family(&fam).unwrap();
        }
    }

    #[test]
    fn deterministic_construction() {
        let a = make_family(&Family::Smm { d: 3, seed: 5 }).unwrap().0;
        let b = make_family(&Family::Smm { d: 3, seed: 5 }).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn mc_purification_reproduces_coefficients() {
        let c = CMatrix::from_real_rows(&[&[0.6, 0.2], &[0.2, 0.4]]);
        let (psi, cert) = make_family(&Family::McPurification { c: c.clone() }).unwrap();
        let bc = reduce(&psi, &[1, 2]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((bc.matrix()[(i * 2 + i, j * 2 + j)] - c[(i, j)]).norm() < 1e-12);
            }
        }
        assert_eq!(cert.claimed_string(), "SMS");
    }
}
