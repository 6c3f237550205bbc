//! Separability-type criteria on bipartite operators and the S/P/N/D/M mapper.
//!
//! Every function here takes a two-party [`DensityOp`]; use
//! [`DensityOp::group`] to cut a multipartite operator first.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distill::{self, Budget, DistillWitness};
use crate::error::{Error, Result};
use crate::linalg::{self, eig_hermitian, CMatrix, C64};
use crate::qstate::{self, entropy_of_spectrum, majorizes, partial_transpose, reduce, DensityOp, PureState};

/// Absolute gap under which two spectra or two entropies count as equal.
pub const EQUALITY_TOL: f64 = 1e-8;
/// Reconstruction tolerance for structured forms (MC, GHZ).
pub const RECONSTRUCT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    Separable,
    Ppt,
    Reduction,
    /// `spec ρ_A ≺ spec ρ_AB` in the majorization order.
    Majorization,
    /// `H(ρ_AB) ≥ max(H(ρ_A), H(ρ_B))`.
    ConditionalEntropy,
    /// The focus marginal and the pair have identical spectra.
    SpectrumEqual,
    /// The focus marginal and the pair have equal entropy.
    EntropyEqual,
    Distillable,
}

impl Criterion {
    pub fn tag(self) -> &'static str {
        match self {
            Criterion::Separable => "separable",
            Criterion::Ppt => "ppt",
            Criterion::Reduction => "reduction",
            Criterion::Majorization => "majorization",
            Criterion::ConditionalEntropy => "conditional-entropy",
            Criterion::SpectrumEqual => "spectrum-equal",
            Criterion::EntropyEqual => "entropy-equal",
            Criterion::Distillable => "distillable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Holds,
    Fails,
    Unknown,
}

impl Status {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Status::Holds
        } else {
            Status::Fails
        }
    }

    pub fn is_decided(self) -> bool {
        self != Status::Unknown
    }
}

/// Which rule of [`decide_separable`] settled the question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SepRule {
    Npt,
    SmallDimensionPpt,
    LowRankPpt,
    MaximallyCorrelated,
    TheoremContext,
    Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Evidence {
    MinEigenvalue(f64),
    /// Smallest conditional entropy, in bits.
    EntropyGap(f64),
    /// Worst partial-sum deficit of the majorization test (≤ 0 when it holds).
    MajorizationSlack(f64),
    /// `ℓ∞` spectral distance or absolute entropy difference.
    EqualityGap(f64),
    Rule { rule: SepRule, detail: String },
    Witness(String),
    Reason(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: Criterion,
    pub status: Status,
    pub evidence: Evidence,
    pub certificate_based: bool,
}

impl Verdict {
    fn new(criterion: Criterion, status: Status, evidence: Evidence) -> Self {
        Self {
            criterion,
            status,
            evidence,
            certificate_based: false,
        }
    }

    fn unknown(criterion: Criterion, reason: impl Into<String>) -> Self {
        Self::new(criterion, Status::Unknown, Evidence::Reason(reason.into()))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?}", self.criterion.tag(), self.status)?;
        match &self.evidence {
            Evidence::MinEigenvalue(x) => write!(f, " (min eigenvalue {x:.3e})"),
            Evidence::EntropyGap(x) => write!(f, " (min conditional entropy {x:.6})"),
            Evidence::MajorizationSlack(x) => write!(f, " (slack {x:.3e})"),
            Evidence::EqualityGap(x) => write!(f, " (gap {x:.3e})"),
            Evidence::Rule { rule, detail } => write!(f, " [{rule:?}: {detail}]"),
            Evidence::Witness(w) => write!(f, " [witness {w}]"),
            Evidence::Reason(r) => write!(f, " ({r})"),
        }?;
        if self.certificate_based {
            write!(f, " (certificate)")?;
        }
        Ok(())
    }
}

/// Hierarchy label. The derived order is the strength order used by the
/// monoid max-rule; `Indeterminate` sorts last so that it absorbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    S,
    P,
    NCandidate,
    D,
    M,
    Indeterminate,
}

impl ClassLabel {
    pub fn letter(self) -> &'static str {
        match self {
            ClassLabel::S => "S",
            ClassLabel::P => "P",
            ClassLabel::NCandidate => "N",
            ClassLabel::D => "D",
            ClassLabel::M => "M",
            ClassLabel::Indeterminate => "?",
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        Some(match c {
            'S' => ClassLabel::S,
            'P' => ClassLabel::P,
            'N' => ClassLabel::NCandidate,
            'D' => ClassLabel::D,
            'M' => ClassLabel::M,
            '?' => ClassLabel::Indeterminate,
            _ => return None,
        })
    }

    /// PPT labels are certified non-distillable.
    pub fn non_distillable(self) -> bool {
        matches!(self, ClassLabel::S | ClassLabel::P)
    }

    pub fn is_decisive(self) -> bool {
        !matches!(self, ClassLabel::NCandidate | ClassLabel::Indeterminate)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::NCandidate => f.write_str("N_candidate"),
            ClassLabel::Indeterminate => f.write_str("Indeterminate"),
            other => f.write_str(other.letter()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BipartiteClass {
    pub label: ClassLabel,
    pub justification: Vec<Verdict>,
    pub witness: Option<DistillWitness>,
}

impl BipartiteClass {
    pub fn verdict(&self, criterion: Criterion) -> Option<&Verdict> {
        self.justification.iter().find(|v| v.criterion == criterion)
    }

    pub fn certificate_based(&self) -> bool {
        self.justification.iter().any(|v| v.certificate_based)
    }
}

fn require_bipartite(rho: &DensityOp) -> Result<(usize, usize)> {
    match rho.dims() {
        [a, b] => Ok((*a, *b)),
        other => Err(Error::InvalidParties(format!(
            "expected a bipartite operator, got dims {other:?}"
        ))),
    }
}

/// Positivity of the partial transpose on the second party.
pub fn check_ppt(rho: &DensityOp, tol: f64) -> Result<Verdict> {
    require_bipartite(rho)?;
    let pt = partial_transpose(rho, &[1])?;
    let chk = linalg::is_psd(&pt, tol)?;
    Ok(Verdict::new(
        Criterion::Ppt,
        Status::from_bool(chk.is_psd),
        Evidence::MinEigenvalue(chk.min_eigenvalue),
    ))
}

/// The two reduction operators `ρ_A ⊗ I − ρ` and `I ⊗ ρ_B − ρ`.
pub(crate) fn reduction_operators(rho: &DensityOp) -> Result<(CMatrix, CMatrix)> {
    let (da, db) = require_bipartite(rho)?;
    let ra = rho.partial_trace(&[0])?;
    let rb = rho.partial_trace(&[1])?;
    let left = &ra.matrix().kron(&CMatrix::identity(db)) - rho.matrix();
    let right = &CMatrix::identity(da).kron(rb.matrix()) - rho.matrix();
    Ok((left, right))
}

/// Both reduction operators positive. Evidence is the smaller of the
/// two minimum eigenvalues.
pub fn check_reduction(rho: &DensityOp, tol: f64) -> Result<Verdict> {
    let (left, right) = reduction_operators(rho)?;
    let a = linalg::is_psd(&left, tol)?;
    let b = linalg::is_psd(&right, tol)?;
    Ok(Verdict::new(
        Criterion::Reduction,
        Status::from_bool(a.is_psd && b.is_psd),
        Evidence::MinEigenvalue(a.min_eigenvalue.min(b.min_eigenvalue)),
    ))
}

/// Outcome of the spectral criteria on one bipartite operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub majorization: Verdict,
    pub conditional_entropy: Verdict,
    pub spectrum_equal_a: bool,
    pub spectrum_equal_b: bool,
    pub entropy_equal_a: bool,
    pub entropy_equal_b: bool,
    pub h_ab: f64,
    pub h_a: f64,
    pub h_b: f64,
    pub spectrum_gap_a: f64,
    pub spectrum_gap_b: f64,
}

impl SpectralReport {
    pub fn spectrum_equal(&self, side: Side) -> bool {
        match side {
            Side::A => self.spectrum_equal_a,
            Side::B => self.spectrum_equal_b,
        }
    }

    pub fn entropy_equal(&self, side: Side) -> bool {
        match side {
            Side::A => self.entropy_equal_a,
            Side::B => self.entropy_equal_b,
        }
    }

    pub fn spectrum_gap(&self, side: Side) -> f64 {
        match side {
            Side::A => self.spectrum_gap_a,
            Side::B => self.spectrum_gap_b,
        }
    }

    pub fn entropy_gap(&self, side: Side) -> f64 {
        match side {
            Side::A => (self.h_ab - self.h_a).abs(),
            Side::B => (self.h_ab - self.h_b).abs(),
        }
    }
}

fn clamp_spectrum(mut s: Vec<f64>) -> Vec<f64> {
    for x in &mut s {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let sum: f64 = s.iter().sum();
    s.iter().map(|x| x / sum).collect()
}

fn majorization_slack(x: &[f64], y: &[f64]) -> f64 {
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(|a, b| b.total_cmp(a));
    ys.sort_by(|a, b| b.total_cmp(a));
    let n = xs.len().max(ys.len());
    xs.resize(n, 0.0);
    ys.resize(n, 0.0);
    let (mut sx, mut sy, mut worst) = (0.0, 0.0, f64::NEG_INFINITY);
    for k in 0..n {
        sx += xs[k];
        sy += ys[k];
        worst = f64::max(worst, sy - sx);
    }
    worst
}

/// Majorization, conditional entropy and the spectrum and entropy
/// equality flags for both marginals. The
/// marginals are recomputed from `rho`.
pub fn check_spectral(rho: &DensityOp) -> Result<SpectralReport> {
    require_bipartite(rho)?;
    let s_ab = clamp_spectrum(rho.spectrum()?);
    let s_a = clamp_spectrum(rho.partial_trace(&[0])?.spectrum()?);
    let s_b = clamp_spectrum(rho.partial_trace(&[1])?.spectrum()?);

    let maj = majorizes(&s_a, &s_ab)? && majorizes(&s_b, &s_ab)?;
    let slack = majorization_slack(&s_a, &s_ab).max(majorization_slack(&s_b, &s_ab));

    let h_ab = entropy_of_spectrum(&s_ab);
    let h_a = entropy_of_spectrum(&s_a);
    let h_b = entropy_of_spectrum(&s_b);
    let cond = (h_ab - h_a).min(h_ab - h_b);

    let gap_a = qstate::spectrum_distance(&s_a, &s_ab);
    let gap_b = qstate::spectrum_distance(&s_b, &s_ab);
    Ok(SpectralReport {
        majorization: Verdict::new(
            Criterion::Majorization,
            Status::from_bool(maj),
            Evidence::MajorizationSlack(slack),
        ),
        conditional_entropy: Verdict::new(
            Criterion::ConditionalEntropy,
            Status::from_bool(cond >= -EQUALITY_TOL),
            Evidence::EntropyGap(cond),
        ),
        spectrum_equal_a: gap_a <= EQUALITY_TOL,
        spectrum_equal_b: gap_b <= EQUALITY_TOL,
        entropy_equal_a: (h_ab - h_a).abs() <= EQUALITY_TOL,
        entropy_equal_b: (h_ab - h_b).abs() <= EQUALITY_TOL,
        h_ab,
        h_a,
        h_b,
        spectrum_gap_a: gap_a,
        spectrum_gap_b: gap_b,
    })
}

/// `ρ = Σ_kl c_kl |a_k b_k⟩⟨a_l b_l|` with orthonormal `{a_k}`, `{b_k}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MCForm {
    pub left_basis: Vec<Vec<C64>>,
    pub right_basis: Vec<Vec<C64>>,
    pub coefficients: CMatrix,
}

impl MCForm {
    pub fn reconstruct(&self) -> CMatrix {
        let pairs: Vec<Vec<C64>> = self
            .left_basis
            .iter()
            .zip(&self.right_basis)
            .map(|(a, b)| linalg::kron_vec(a, b))
            .collect();
        let d = pairs[0].len();
        let n = pairs.len();
        CMatrix::from_fn(d, d, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                for l in 0..n {
                    acc += self.coefficients[(k, l)] * pairs[k][i] * pairs[l][j].conj();
                }
            }
            acc
        })
    }

    /// Largest off-diagonal magnitude of `c`.
    pub fn max_offdiagonal(&self) -> f64 {
        let n = self.coefficients.rows();
        let mut m = 0.0f64;
        for k in 0..n {
            for l in 0..n {
                if k != l {
                    m = m.max(self.coefficients[(k, l)].norm());
                }
            }
        }
        m
    }

    pub fn is_diagonal(&self) -> bool {
        self.max_offdiagonal() <= RECONSTRUCT_TOL
    }
}

#[derive(Debug, Clone)]
pub enum McDetection {
    Found(MCForm),
    NotMc,
    /// The marginal spectrum is degenerate on its support and the eigenbasis
    /// the solver picked did not expose the form; no pairing is guessed.
    Degenerate,
}

impl McDetection {
    pub fn form(&self) -> Option<&MCForm> {
        match self {
            McDetection::Found(f) => Some(f),
            _ => None,
        }
    }
}

fn support_degenerate(values: &[f64]) -> bool {
    values.windows(2).any(|w| (w[0] - w[1]).abs() <= 1e-7)
}

/// Slices `(⟨a| ⊗ I) ρ (|a⟩ ⊗ I)` out of a bipartite operator.
pub(crate) fn conditional_operator(rho: &DensityOp, a: &[C64]) -> CMatrix {
    let (da, db) = (rho.dims()[0], rho.dims()[1]);
    let m = rho.matrix();
    CMatrix::from_fn(db, db, |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for x in 0..da {
            for y in 0..da {
                acc += a[x].conj() * m[(x * db + i, y * db + j)] * a[y];
            }
        }
        acc
    })
}

fn try_mc_from_left(rho: &DensityOp, tol: f64) -> Result<Option<MCForm>> {
    let ra = rho.partial_trace(&[0])?;
    let es = ra.eigen()?;
    let support = es.support_desc(tol);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &k in &support {
        let a = es.vector(k);
        let cond = conditional_operator(rho, &a);
        let ces = eig_hermitian(&cond.hermitian_part())?;
        let n = ces.eigenvalues.len();
        let top = ces.eigenvalues[n - 1];
        let second = if n > 1 { ces.eigenvalues[n - 2] } else { 0.0 };
        if top <= 0.0 || second > RECONSTRUCT_TOL {
            return Ok(None);
        }
        left.push(a);
        right.push(ces.vector(n - 1));
    }
    let g = linalg::gram(&right);
    if g.distance(&CMatrix::identity(right.len())) > RECONSTRUCT_TOL.sqrt() {
        return Ok(None);
    }
    let pairs: Vec<Vec<C64>> = left.iter().zip(&right).map(|(a, b)| linalg::kron_vec(a, b)).collect();
    let n = pairs.len();
    let coefficients = CMatrix::from_fn(n, n, |k, l| rho.matrix().sandwich(&pairs[k], &pairs[l]));
    let form = MCForm {
        left_basis: left,
        right_basis: right,
        coefficients,
    };
    if form.reconstruct().distance(rho.matrix()) > RECONSTRUCT_TOL {
        return Ok(None);
    }
    Ok(Some(form))
}

/// Looks for a maximally correlated form by pairing each support eigenvector
/// of `ρ_A` with the unique partner its conditional operator singles out.
pub fn detect_max_correlated(rho: &DensityOp, tol: f64) -> Result<McDetection> {
    require_bipartite(rho)?;
    if let Some(f) = try_mc_from_left(rho, tol)? {
        return Ok(McDetection::Found(f));
    }
    let swapped = rho.permute_parties(&[1, 0])?;
    if let Some(f) = try_mc_from_left(&swapped, tol)? {
        return Ok(McDetection::Found(MCForm {
            left_basis: f.right_basis,
            right_basis: f.left_basis,
            coefficients: f.coefficients,
        }));
    }
    let deg = |op: DensityOp| -> Result<bool> {
        let es = op.eigen()?;
        let vals: Vec<f64> = es.support_desc(tol).iter().map(|&k| es.eigenvalues[k]).collect();
        Ok(support_degenerate(&vals))
    };
    if deg(rho.partial_trace(&[0])?)? && deg(rho.partial_trace(&[1])?)? {
        Ok(McDetection::Degenerate)
    } else {
        Ok(McDetection::NotMc)
    }
}

/// Which side of a bipartite operator plays the focus party of the
/// six-condition equivalence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// The complementary pair was certified non-distillable, so the equality
/// flag on `focus_side` decides separability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremContext {
    pub focus_side: Side,
}

/// A construction-based claim about separability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparabilityClaim {
    pub separable: bool,
    pub note: String,
}

#[derive(Debug, Clone, Default)]
pub struct SepContext {
    pub theorem: Option<TheoremContext>,
    pub certificate: Option<SeparabilityClaim>,
}

fn rule_verdict(status: Status, rule: SepRule, detail: impl Into<String>) -> Verdict {
    Verdict::new(
        Criterion::Separable,
        status,
        Evidence::Rule {
            rule,
            detail: detail.into(),
        },
    )
}

/// Separability on the subclasses where it is decidable. Rules run in a fixed,
/// cheapest-first order; `Unknown` if none applies.
pub fn decide_separable(rho: &DensityOp, ctx: &SepContext, tol: f64) -> Result<Verdict> {
    let (da, db) = require_bipartite(rho)?;
    let ppt = check_ppt(rho, tol)?;
    if ppt.status == Status::Fails {
        return Ok(rule_verdict(Status::Fails, SepRule::Npt, "partial transpose has a negative eigenvalue"));
    }
    let (lo, hi) = (da.min(db), da.max(db));
    if lo == 1 || (lo == 2 && hi <= 3) {
        return Ok(rule_verdict(
            Status::Holds,
            SepRule::SmallDimensionPpt,
            format!("PPT on {da}x{db}"),
        ));
    }
    let rank = rho.rank(tol)?;
    let ra = rho.partial_trace(&[0])?.rank(tol)?;
    let rb = rho.partial_trace(&[1])?.rank(tol)?;
    if rank <= ra.max(rb) {
        return Ok(rule_verdict(
            Status::Holds,
            SepRule::LowRankPpt,
            format!("rank {rank} ≤ max local rank {}", ra.max(rb)),
        ));
    }
    if let McDetection::Found(form) = detect_max_correlated(rho, tol)? {
        let diag = form.is_diagonal();
        return Ok(rule_verdict(
            Status::from_bool(diag),
            SepRule::MaximallyCorrelated,
            format!("coefficient off-diagonal {:.3e}", form.max_offdiagonal()),
        ));
    }
    if let Some(th) = ctx.theorem {
        let spec = check_spectral(rho)?;
        let eq = spec.entropy_equal(th.focus_side);
        return Ok(rule_verdict(
            Status::from_bool(eq),
            SepRule::TheoremContext,
            format!("entropy gap {:.3e} on {:?}", spec.entropy_gap(th.focus_side), th.focus_side),
        ));
    }
    if let Some(claim) = &ctx.certificate {
        let mut v = rule_verdict(Status::from_bool(claim.separable), SepRule::Certificate, claim.note.clone());
        v.certificate_based = true;
        return Ok(v);
    }
    Ok(Verdict::unknown(
        Criterion::Separable,
        format!("PPT with rank {rank} > local ranks ({ra}, {rb}); no decidable rule applies"),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub tol: f64,
    pub seed: u64,
    pub rotations: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol: linalg::DEFAULT_TOL,
            seed: 0,
            rotations: 64,
        }
    }
}

/// Maps criteria outcomes onto the hierarchy.
pub fn classify_bipartite(rho: &DensityOp, ctx: &SepContext, settings: &Settings) -> Result<BipartiteClass> {
    let tol = settings.tol;
    let ppt = check_ppt(rho, tol)?;
    let mut justification = vec![ppt.clone()];
    if ppt.status == Status::Holds {
        let sep = decide_separable(rho, ctx, tol)?;
        let label = match sep.status {
            Status::Holds => ClassLabel::S,
            Status::Fails => ClassLabel::P,
            Status::Unknown => ClassLabel::Indeterminate,
        };
        justification.push(sep);
        return Ok(BipartiteClass {
            label,
            justification,
            witness: None,
        });
    }
    justification.push(rule_verdict(Status::Fails, SepRule::Npt, "partial transpose has a negative eigenvalue"));
    let red = check_reduction(rho, tol)?;
    let red_fails = red.status == Status::Fails;
    justification.push(red);
    let budget = if red_fails {
        Budget::BasisPairsOnly
    } else {
        Budget::PlusRandomRotations {
            rotations: settings.rotations,
            seed: settings.seed,
        }
    };
    let witness = distill::witness_search(rho, budget, tol)?;
    let label = match (&witness, red_fails) {
        (_, true) => ClassLabel::M,
        (Some(_), false) => ClassLabel::D,
        (None, false) => ClassLabel::NCandidate,
    };
    justification.push(match &witness {
        Some(w) => Verdict::new(Criterion::Distillable, Status::Holds, Evidence::Witness(w.summary())),
        None => Verdict::unknown(Criterion::Distillable, "no one-copy witness within budget"),
    });
    Ok(BipartiteClass {
        label,
        justification,
        witness,
    })
}

/// Every verdict, spectral checks included, evaluated without theorem context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriteriaBundle {
    pub separable: Verdict,
    pub ppt: Verdict,
    pub reduction: Verdict,
    pub spectral: SpectralReport,
}

impl CriteriaBundle {
    pub fn evaluate(rho: &DensityOp, tol: f64) -> Result<Self> {
        Ok(Self {
            separable: decide_separable(rho, &SepContext::default(), tol)?,
            ppt: check_ppt(rho, tol)?,
            reduction: check_reduction(rho, tol)?,
            spectral: check_spectral(rho)?,
        })
    }

    /// Implications `sep ⇒ PPT ⇒ reduction ⇒ majorization ⇒ conditional
    /// entropy` that a verdict pattern
    /// breaks; `Unknown` links are skipped.
    pub fn chain_violations(&self) -> Vec<String> {
        let chain = [
            &self.separable,
            &self.ppt,
            &self.reduction,
            &self.spectral.majorization,
            &self.spectral.conditional_entropy,
        ];
        let mut out = Vec::new();
        for (i, stronger) in chain.iter().enumerate() {
            if stronger.status != Status::Holds {
                continue;
            }
            for weaker in &chain[i + 1..] {
                if weaker.status == Status::Fails {
                    out.push(format!(
                        "{} holds but {} fails",
                        stronger.criterion.tag(),
                        weaker.criterion.tag()
                    ));
                }
            }
        }
        out
    }
}

/// Result of the six-condition inference for one orientation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferenceRecord {
    /// `(x, y, z)`: the record is about `ρ_xy` with `ρ_yz` as the anchor pair.
    pub orientation: [usize; 3],
    pub applicable: bool,
    pub reason: String,
    pub separable: Verdict,
    pub ppt: Verdict,
    pub reduction: Verdict,
    pub majorization: Verdict,
    pub conditional_entropy: Verdict,
    pub spectrum_equal: bool,
    pub entropy_equal: bool,
    pub chain_violations: Vec<String>,
    /// All decided members of `statuses()` agree.
    pub consistent: bool,
}

impl InferenceRecord {
    /// Separable, PPT, reduction, spectrum-equal and entropy-equal, in that
    /// order.
    pub fn statuses(&self) -> [Status; 5] {
        [
            self.separable.status,
            self.ppt.status,
            self.reduction.status,
            Status::from_bool(self.spectrum_equal),
            Status::from_bool(self.entropy_equal),
        ]
    }
}

fn validate_orientation(psi: &PureState, x: usize, y: usize, z: usize) -> Result<()> {
    if psi.num_parties() != 3 {
        return Err(Error::InvalidParties(format!(
            "expected a tripartite state, got {} parties",
            psi.num_parties()
        )));
    }
    let mut seen = [false; 3];
    for p in [x, y, z] {
        if p > 2 || seen[p] {
            return Err(Error::InvalidParties(format!("({x}, {y}, {z}) is not a permutation of the parties")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Why the six-condition equivalence applies to `ρ_xy` when `ρ_yz` is the
/// anchor, or `None`.
pub fn anchor_precondition(psi: &PureState, x: usize, y: usize, z: usize, tol: f64) -> Result<Option<String>> {
    validate_orientation(psi, x, y, z)?;
    let anchor = reduce(psi, &[y, z])?;
    let ppt = check_ppt(&anchor, tol)?;
    if ppt.status == Status::Holds {
        return Ok(Some(format!("anchor pair ({y},{z}) is PPT, hence non-distillable")));
    }
    let ranks = psi.local_ranks(tol)?;
    if ranks.iter().any(|&r| r <= 2) && check_reduction(&anchor, tol)?.status == Status::Holds {
        return Ok(Some(format!(
            "a local rank is ≤ 2 and anchor pair ({y},{z}) satisfies the reduction criterion"
        )));
    }
    Ok(None)
}

/// Evaluates every criterion on `ρ_xy` of a tripartite pure state, with
/// the spectrum and entropy equalities taken for party `x`, and records whether
/// the decided ones agree. Inapplicable orientations still get a record.
pub fn infer_six_conditions(psi: &PureState, focus: (usize, usize), anchor: usize, tol: f64) -> Result<InferenceRecord> {
    let (x, y) = focus;
    let z = anchor;
    validate_orientation(psi, x, y, z)?;
    let pre = anchor_precondition(psi, x, y, z, tol)?;
    let rho = reduce(psi, &[x, y])?;
    let bundle = CriteriaBundle::evaluate(&rho, tol)?;
    let spectrum_equal = bundle.spectral.spectrum_equal_a;
    let entropy_equal = bundle.spectral.entropy_equal_a;
    let chain_violations = bundle.chain_violations();
    let mut rec = InferenceRecord {
        orientation: [x, y, z],
        applicable: pre.is_some(),
        reason: pre.unwrap_or_else(|| format!("anchor pair ({y},{z}) is not certified non-distillable")),
        separable: bundle.separable,
        ppt: bundle.ppt,
        reduction: bundle.reduction,
        majorization: bundle.spectral.majorization,
        conditional_entropy: bundle.spectral.conditional_entropy,
        spectrum_equal,
        entropy_equal,
        chain_violations,
        consistent: true,
    };
    let decided: Vec<Status> = rec.statuses().into_iter().filter(|s| s.is_decided()).collect();
    rec.consistent = decided.windows(2).all(|w| w[0] == w[1]);
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{r, DEFAULT_TOL};
    use crate::sampling::{random_pure_state, random_unit_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bell() -> DensityOp {
        PureState::from_terms(vec![2, 2], &[(&[0, 0], r(1.0)), (&[1, 1], r(1.0))])
            .unwrap()
            .density()
    }

    fn classical_pair() -> DensityOp {
        DensityOp::new(vec![2, 2], CMatrix::from_real_diag(&[0.5, 0.0, 0.0, 0.5]), DEFAULT_TOL).unwrap()
    }

    fn counterexample() -> PureState {
        PureState::from_terms(
            vec![2, 2, 2],
            &[(&[0, 0, 0], r(1.0)), (&[0, 1, 1], r(1.0)), (&[1, 1, 1], r(1.0))],
        )
        .unwrap()
    }

    fn min_eig(v: &Verdict) -> f64 {
        match v.evidence {
            Evidence::MinEigenvalue(x) => x,
            _ => panic!("no eigenvalue evidence"),
        }
    }

    #[test]
    fn ppt_examples() {
        assert_eq!(check_ppt(&classical_pair(), DEFAULT_TOL).unwrap().status, Status::Holds);
        let v = check_ppt(&bell(), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, Status::Fails);
        assert!((min_eig(&v) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn reduction_examples() {
        let v = check_reduction(&bell(), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, Status::Fails);
        assert!((min_eig(&v) + 0.5).abs() < 1e-12);
        assert_eq!(check_reduction(&classical_pair(), DEFAULT_TOL).unwrap().status, Status::Holds);
    }

    #[test]
    fn spectral_examples() {
        let s = check_spectral(&classical_pair()).unwrap();
        assert_eq!(s.majorization.status, Status::Holds);
        assert_eq!(s.conditional_entropy.status, Status::Holds);
        assert!(s.spectrum_equal_a && s.spectrum_equal_b && s.entropy_equal_a && s.entropy_equal_b);
        assert!((s.h_ab - 1.0).abs() < 1e-12 && (s.h_a - 1.0).abs() < 1e-12);

        let s = check_spectral(&bell()).unwrap();
        assert_eq!(s.conditional_entropy.status, Status::Fails);
        assert!(s.h_ab.abs() < 1e-9 && (s.h_a - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mc_examples() {
        let f = detect_max_correlated(&bell(), DEFAULT_TOL).unwrap();
        let form = f.form().expect("Bell projector is maximally correlated");
        for k in 0..2 {
            for l in 0..2 {
                assert!((form.coefficients[(k, l)].norm() - 0.5).abs() < 1e-12);
            }
        }
        let diag = DensityOp::new(vec![3, 3], CMatrix::from_real_diag(&[0.5, 0., 0., 0., 0.3, 0., 0., 0., 0.2]), DEFAULT_TOL).unwrap();
        let form = detect_max_correlated(&diag, DEFAULT_TOL).unwrap();
        let form = form.form().unwrap();
        assert!(form.is_diagonal());
        let mut d: Vec<f64> = form.coefficients.diagonal().iter().map(|z| z.re).collect();
        d.sort_by(|a, b| b.total_cmp(a));
        assert!((d[0] - 0.5).abs() < 1e-12 && (d[2] - 0.2).abs() < 1e-12);

        let ab = reduce(&counterexample(), &[0, 1]).unwrap();
        assert!(detect_max_correlated(&ab, DEFAULT_TOL).unwrap().form().is_none());
    }

    #[test]
    fn mc_detection_survives_local_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = [0.5f64, 0.3, 0.2];
        let b: Vec<Vec<C64>> = (0..3).map(|_| random_unit_vector(3, &mut rng)).collect();
        // Σ √p_i |b_i, i, i⟩ reduced to BC is maximally correlated.
        let mut amps = vec![r(0.0); 27];
        for i in 0..3 {
            for a in 0..3 {
                amps[a * 9 + i * 3 + i] = b[i][a] * p[i].sqrt();
            }
        }
        let psi = PureState::from_unnormalized(vec![3, 3, 3], amps).unwrap();
        let bc = reduce(&psi, &[1, 2]).unwrap();
        let form = detect_max_correlated(&bc, DEFAULT_TOL).unwrap();
        let form = form.form().expect("expected MC form");
        assert!(form.reconstruct().distance(bc.matrix()) < 1e-8);
        assert!(!form.is_diagonal());
    }

    #[test]
    fn separability_rules() {
        let ab = reduce(&counterexample(), &[0, 1]).unwrap();
        let v = decide_separable(&ab, &SepContext::default(), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, Status::Holds);
        let v = decide_separable(&bell(), &SepContext::default(), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, Status::Fails);
        assert!(matches!(v.evidence, Evidence::Rule { rule: SepRule::Npt, .. }));
    }

    #[test]
    fn low_rank_rule_on_three_by_three() {
        let diag = DensityOp::new(vec![3, 3], CMatrix::from_real_diag(&[0.5, 0., 0., 0., 0.3, 0., 0., 0., 0.2]), DEFAULT_TOL).unwrap();
        let v = decide_separable(&diag, &SepContext::default(), DEFAULT_TOL).unwrap();
        assert!(matches!(v.evidence, Evidence::Rule { rule: SepRule::LowRankPpt, .. }));
    }

    #[test]
    fn classify_examples() {
        let s = Settings::default();
        let c = classify_bipartite(&classical_pair(), &SepContext::default(), &s).unwrap();
        assert_eq!(c.label, ClassLabel::S);
        let c = classify_bipartite(&bell(), &SepContext::default(), &s).unwrap();
        assert_eq!(c.label, ClassLabel::M);
    }

    #[test]
    fn label_order() {
        assert!(ClassLabel::S < ClassLabel::P);
        assert!(ClassLabel::P < ClassLabel::NCandidate);
        assert!(ClassLabel::NCandidate < ClassLabel::D);
        assert!(ClassLabel::D < ClassLabel::M);
        assert!(ClassLabel::M < ClassLabel::Indeterminate);
    }

    #[test]
    fn six_conditions_inapplicable_on_counterexample() {
        let rec = infer_six_conditions(&counterexample(), (0, 1), 2, DEFAULT_TOL).unwrap();
        assert!(!rec.applicable);
        assert_eq!(rec.separable.status, Status::Holds);
    }

    #[test]
    fn six_conditions_on_ghz() {
        let ghz = PureState::from_terms(vec![2, 2, 2], &[(&[0, 0, 0], r(1.0)), (&[1, 1, 1], r(1.0))]).unwrap();
        let rec = infer_six_conditions(&ghz, (0, 1), 2, DEFAULT_TOL).unwrap();
        assert!(rec.applicable && rec.consistent);
        assert_eq!(rec.separable.status, Status::Holds);
        assert!(rec.entropy_equal);
    }

    #[test]
    fn chain_holds_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let psi = random_pure_state(&[2, 3, 2], &mut rng);
            for keep in [[0, 1], [1, 2], [0, 2]] {
                let rho = reduce(&psi, &keep).unwrap();
                let b = CriteriaBundle::evaluate(&rho, DEFAULT_TOL).unwrap();
                assert!(b.chain_violations().is_empty(), "{:?}", b.chain_violations());
            }
        }
    }

    #[test]
    fn ppt_equals_reduction_on_qubit_qudit() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in 2..=4 {
            for _ in 0..10 {
                let psi = random_pure_state(&[2, n, 2], &mut rng);
                let rho = reduce(&psi, &[0, 1]).unwrap();
                assert_eq!(
                    check_ppt(&rho, DEFAULT_TOL).unwrap().status,
                    check_reduction(&rho, DEFAULT_TOL).unwrap().status
                );
            }
        }
    }
}
