//! Tripartite classification by the triple of reduced-pair classes.
//!
//! Pairs are always listed as `(AB, BC, CA)`; `CA` keeps C as its first
//! subsystem.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{
    self, check_ppt, check_reduction, check_spectral, classify_bipartite, BipartiteClass, ClassLabel, SepContext,
    Settings, Side, Status, TheoremContext,
};
use crate::error::{Error, Result};
use crate::families::Certificate;
use crate::linalg::{r, C64};
use crate::qstate::{reduce, PureState};
use crate::sampling::random_pure_state;
use crate::statefile;

/// `(x, y)` party pairs in `(AB, BC, CA)` order.
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Index into `PAIRS` of the pair that excludes `party`.
fn pair_without(party: usize) -> usize {
    match party {
        2 => 0,
        0 => 1,
        _ => 2,
    }
}

fn third(x: usize, y: usize) -> usize {
    3 - x - y
}

pub fn triple_string(t: &[ClassLabel; 3]) -> String {
    t.iter().map(|l| l.letter()).collect()
}

/// Parses e.g. `"SSM"`.
pub fn parse_triple(s: &str) -> Option<[ClassLabel; 3]> {
    let v: Vec<ClassLabel> = s.chars().map(ClassLabel::from_letter).collect::<Option<_>>()?;
    v.try_into().ok()
}

/// Labels after relabelling parties: new party `k` is old party `perm[k]`.
pub fn permute_triple(t: &[ClassLabel; 3], perm: [usize; 3]) -> [ClassLabel; 3] {
    let mut out = [ClassLabel::S; 3];
    for (k, &(x, y)) in PAIRS.iter().enumerate() {
        let (ox, oy) = (perm[x], perm[y]);
        out[k] = t[pair_without(third(ox, oy))];
    }
    out
}

/// Certificate of `psi.permute_parties(&perm)`.
pub fn permute_certificate(cert: &Certificate, perm: [usize; 3]) -> Certificate {
    let source = |k: usize| {
        let (x, y) = PAIRS[k];
        pair_without(third(perm[x], perm[y]))
    };
    Certificate {
        family: format!("{}[{}{}{}]", cert.family, perm[0], perm[1], perm[2]),
        params: cert.params.clone(),
        claimed: cert.claimed.map(|t| permute_triple(&t, perm)),
        rank_upper: cert.rank_upper,
        separability: std::array::from_fn(|k| cert.separability[source(k)].clone()),
        provenance: format!("{} with parties reordered", cert.provenance),
    }
}

pub const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Lexicographically smallest image under party permutations, and the
/// permutation reaching it.
pub fn canonicalize(t: &[ClassLabel; 3]) -> ([ClassLabel; 3], [usize; 3]) {
    PERMUTATIONS
        .iter()
        .map(|&p| (permute_triple(t, p), p))
        .min()
        .expect("non-empty permutation list")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleClass {
    /// `(AB, BC, CA)` with full justification.
    pub pairs: [BipartiteClass; 3],
    pub raw: [ClassLabel; 3],
    pub canonical: [ClassLabel; 3],
    /// Party relabelling taking `raw` to `canonical`.
    pub perm: [usize; 3],
}

impl TripleClass {
    pub fn raw_string(&self) -> String {
        triple_string(&self.raw)
    }

    pub fn canonical_string(&self) -> String {
        triple_string(&self.canonical)
    }

    pub fn is_decisive(&self) -> bool {
        self.raw.iter().all(|l| l.is_decisive())
    }

    pub fn certificate_based(&self) -> bool {
        self.pairs.iter().any(|p| p.certificate_based())
    }
}

impl fmt::Display for TripleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S_{}", self.raw_string())?;
        if self.raw != self.canonical {
            write!(f, " (canonical S_{})", self.canonical_string())?;
        }
        Ok(())
    }
}

/// Theorem context for pair `(x, y)`: the first pair sharing a party with
/// it whose six-condition precondition holds.
fn theorem_context(psi: &PureState, x: usize, y: usize, tol: f64) -> Result<Option<TheoremContext>> {
    let z = third(x, y);
    if criteria::anchor_precondition(psi, x, y, z, tol)?.is_some() {
        return Ok(Some(TheoremContext { focus_side: Side::A }));
    }
    if criteria::anchor_precondition(psi, y, x, z, tol)?.is_some() {
        return Ok(Some(TheoremContext { focus_side: Side::B }));
    }
    Ok(None)
}

/// Classifies all three reduced pairs. A certificate's separability claims
/// are consulted only after every numerical rule.
pub fn classify_tripartite(psi: &PureState, cert: Option<&Certificate>, settings: &Settings) -> Result<TripleClass> {
    if psi.num_parties() != 3 {
        return Err(Error::InvalidParties(format!(
            "expected a tripartite state, got {} parties",
            psi.num_parties()
        )));
    }
    let mut pairs = Vec::with_capacity(3);
    for (k, &(x, y)) in PAIRS.iter().enumerate() {
        let rho = reduce(psi, &[x, y])?;
        let ctx = SepContext {
            theorem: theorem_context(psi, x, y, settings.tol)?,
            certificate: cert.and_then(|c| c.separability[k].clone()),
        };
        pairs.push(classify_bipartite(&rho, &ctx, settings)?);
    }
    let pairs: [BipartiteClass; 3] = pairs.try_into().expect("three pairs");
    let raw = [pairs[0].label, pairs[1].label, pairs[2].label];
    let (canonical, perm) = canonicalize(&raw);
    Ok(TripleClass {
        pairs,
        raw,
        canonical,
        perm,
    })
}

/// Structural consequences of the theory that any output must respect.
pub fn theorem_violations(t: &[ClassLabel; 3]) -> Vec<String> {
    use ClassLabel::*;
    let mut out = Vec::new();
    for (k, &l) in t.iter().enumerate() {
        let others: Vec<ClassLabel> = (0..3).filter(|&j| j != k).map(|j| t[j]).collect();
        if l.non_distillable() {
            for &o in &others {
                if !matches!(o, S | M | Indeterminate) {
                    out.push(format!(
                        "pair {k} is {l} yet another pair is {o}; a non-distillable pair forces S or M"
                    ));
                }
            }
        }
        let all_entangled = t.iter().all(|&x| x != S && x != Indeterminate);
        if all_entangled {
            if matches!(l, P | NCandidate) && others.iter().any(|&o| o != M) {
                out.push(format!("pair {k} is {l} but the others are not both M"));
            }
            if l == D && others.iter().any(|&o| !matches!(o, D | M)) {
                out.push(format!("pair {k} is D but another pair is weaker than D"));
            }
        }
    }
    out
}

pub const ESSENTIAL: [&str; 9] = ["SSS", "SSM", "SMM", "PMM", "NMM", "DDD", "DDM", "DMM", "MMM"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankBounds {
    pub lower: usize,
    pub upper: usize,
    pub lower_method: String,
    pub upper_method: String,
}

impl fmt::Display for RankBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}] ({}; {})", self.lower, self.upper, self.lower_method, self.upper_method)
    }
}

/// Bounds on the tensor rank. The lower bound is the largest local rank,
/// raised to `max(d_x, d_y) + 1` for every pair certified D: a tensor rank
/// equal to `max(d_x, d_y)` would make reduction imply separability.
pub fn tensor_rank_bounds(
    psi: &PureState,
    known_decomposition: Option<usize>,
    triple: Option<&TripleClass>,
    tol: f64,
) -> Result<RankBounds> {
    if psi.num_parties() != 3 {
        return Err(Error::InvalidParties("tensor rank bounds need a tripartite state".into()));
    }
    let ranks = psi.local_ranks(tol)?;
    let mut lower = *ranks.iter().max().expect("three parties");
    let mut lower_method = "max local rank".to_string();
    if let Some(t) = triple {
        for (k, &(x, y)) in PAIRS.iter().enumerate() {
            let pc = &t.pairs[k];
            let reduction_holds = pc
                .verdict(criteria::Criterion::Reduction)
                .is_some_and(|v| v.status == Status::Holds);
            if pc.label == ClassLabel::D && reduction_holds && pc.witness.as_ref().is_some_and(|w| w.verified) {
                let bound = ranks[x].max(ranks[y]) + 1;
                if bound > lower {
                    lower = bound;
                    lower_method = format!("D pair ({x},{y}) forces rank > {}", bound - 1);
                }
            }
        }
    }
    let mut sorted = ranks.clone();
    sorted.sort_unstable();
    let product = sorted[0] * sorted[1];
    let (upper, upper_method) = match known_decomposition {
        Some(k) if k < product => (k, format!("explicit {k}-term decomposition")),
        _ => (product, "product of the two smallest local ranks".to_string()),
    };
    if lower > upper {
        return Err(Error::Precondition(format!(
            "tensor rank bounds are inconsistent: lower {lower} > upper {upper}"
        )));
    }
    Ok(RankBounds {
        lower,
        upper,
        lower_method,
        upper_method,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub relation: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableReport {
    pub canonical: String,
    /// Local ranks in canonical party order.
    pub ranks: [usize; 3],
    pub checks: Vec<ConstraintCheck>,
    /// The triple is decisive but not one of the essential subsets.
    pub contradiction: bool,
    /// Some component is Indeterminate.
    pub undecided: bool,
}

impl TableReport {
    pub fn passes(&self) -> bool {
        !self.contradiction && !self.undecided && self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Clone, Copy)]
enum Rel {
    Eq,
    Ge,
    Gt,
}

/// Checks the tensor-rank and local-rank relations of the essential subset
/// the triple belongs to. `ranks` are `(d_A, d_B, d_C)` in raw order.
pub fn check_table_constraints(raw: &[ClassLabel; 3], bounds: &RankBounds, ranks: [usize; 3]) -> TableReport {
    let (canonical, perm) = canonicalize(raw);
    let name = triple_string(&canonical);
    let d = [ranks[perm[0]], ranks[perm[1]], ranks[perm[2]]];
    let (a, b, c) = (d[0], d[1], d[2]);
    let undecided = canonical.contains(&ClassLabel::Indeterminate);
    let contradiction = !undecided && !ESSENTIAL.contains(&name.as_str());
    let mut checks = Vec::new();
    let mut rank = |rel: Rel, label: &str, x: usize| {
        let (pass, sym) = match rel {
            Rel::Eq => (bounds.lower <= x && x <= bounds.upper, "="),
            Rel::Ge => (bounds.upper >= x, "≥"),
            Rel::Gt => (bounds.upper > x, ">"),
        };
        checks.push(ConstraintCheck {
            relation: format!("r {sym} {label} (r in [{}, {}], {label} = {x})", bounds.lower, bounds.upper),
            pass,
        });
    };
    match name.as_str() {
        "SSS" => {
            rank(Rel::Eq, "d_A", a);
        }
        "SSM" => rank(Rel::Eq, "d_A", a),
        "SMM" => rank(Rel::Eq, "d_C", c),
        "PMM" | "NMM" => rank(Rel::Ge, "d_C", c),
        "DDD" | "DDM" => rank(Rel::Gt, "d_C", c),
        "DMM" => {
            rank(Rel::Ge, "d_C", c);
            rank(Rel::Gt, "d_A", a);
            rank(Rel::Gt, "d_B", b);
        }
        _ => {}
    }
    let mut local = |desc: String, pass: bool| checks.push(ConstraintCheck { relation: desc, pass });
    match name.as_str() {
        "SSS" => local(format!("d_A = d_B = d_C ({a}, {b}, {c})"), a == b && b == c),
        "SSM" => {
            local(format!("d_A = d_C ({a}, {c})"), a == c);
            local(format!("d_C ≥ d_B ({c}, {b})"), c >= b);
        }
        "SMM" | "DMM" => {
            local(format!("d_C ≥ d_A ({c}, {a})"), c >= a);
            local(format!("d_C ≥ d_B ({c}, {b})"), c >= b);
        }
        "PMM" | "NMM" => {
            local(format!("d_C > d_A ({c}, {a})"), c > a);
            local(format!("d_C > d_B ({c}, {b})"), c > b);
        }
        "DDD" => local(format!("d_A = d_B = d_C ({a}, {b}, {c})"), a == b && b == c),
        "DDM" => {
            local(format!("d_C = d_A ({c}, {a})"), c == a);
            local(format!("d_A ≥ d_B ({a}, {b})"), a >= b);
        }
        _ => {}
    }
    TableReport {
        canonical: name,
        ranks: d,
        checks,
        contradiction,
        undecided,
    }
}

/// `w₁|Ψ₁⟩ ⊕ w₂|Ψ₂⟩` with every party's space the direct sum.
pub fn monoid_product(psi1: &PureState, psi2: &PureState, weights: (f64, f64)) -> Result<PureState> {
    if psi1.num_parties() != 3 || psi2.num_parties() != 3 {
        return Err(Error::InvalidParties("monoid product needs two tripartite states".into()));
    }
    let (w1, w2) = weights;
    if !(w1 > 0.0 && w2 > 0.0) || (w1 * w1 + w2 * w2 - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameters(format!(
            "weights ({w1}, {w2}) must be positive with w1² + w2² = 1"
        )));
    }
    let d1 = psi1.dims();
    let d2 = psi2.dims();
    let dims: Vec<usize> = d1.iter().zip(d2).map(|(a, b)| a + b).collect();
    let mut amps = vec![r(0.0); dims.iter().product()];
    let mut embed = |src: &PureState, offset: [usize; 3], w: f64| {
        let sd = src.dims();
        for (k, a) in src.amps().iter().enumerate() {
            let (i, j, l) = (k / (sd[1] * sd[2]), (k / sd[2]) % sd[1], k % sd[2]);
            let flat = ((i + offset[0]) * dims[1] + j + offset[1]) * dims[2] + l + offset[2];
            amps[flat] = a * w;
        }
    };
    embed(psi1, [0, 0, 0], w1);
    embed(psi2, [d1[0], d1[1], d1[2]], w2);
    PureState::from_unnormalized(dims, amps)
}

pub const EQUAL_WEIGHTS: (f64, f64) = (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2);

/// Componentwise maximum; `(S,S,S)` is the unit.
pub fn predict_product_class(t1: &[ClassLabel; 3], t2: &[ClassLabel; 3]) -> [ClassLabel; 3] {
    [t1[0].max(t2[0]), t1[1].max(t2[1]), t1[2].max(t2[2])]
}

/// Certificate of a direct sum: claims combine by the max-rule, known
/// decompositions add, and an entanglement claim on either factor carries
/// over (a block-diagonal sum is separable only if every block is).
pub fn product_certificate(c1: &Certificate, c2: &Certificate) -> Certificate {
    let claimed = match (&c1.claimed, &c2.claimed) {
        (Some(a), Some(b)) => Some(predict_product_class(a, b)),
        _ => None,
    };
    let separability = std::array::from_fn(|k| match (&c1.separability[k], &c2.separability[k]) {
        (Some(a), _) if !a.separable => Some(a.clone()),
        (_, Some(b)) if !b.separable => Some(b.clone()),
        _ => None,
    });
    Certificate {
        family: format!("{}*{}", c1.family, c2.family),
        params: serde_json::json!({ "left": c1.params, "right": c2.params }),
        claimed,
        rank_upper: c1.rank_upper.zip(c2.rank_upper).map(|(a, b)| a + b),
        separability,
        provenance: "direct sum of two certified states".into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanCounterexample {
    pub index: usize,
    pub source: String,
    pub reduction_min_eigenvalue: f64,
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub trials: usize,
    pub seed: u64,
    pub injected: usize,
    /// States where `ρ_BC` satisfies reduction and `ρ_AB` satisfies majorization.
    pub filter_hits: usize,
    /// Filter hits where `ρ_AB` also satisfies reduction.
    pub reduction_holds: usize,
    pub counterexamples: Vec<ScanCounterexample>,
}

struct ScanOutcome {
    hit: bool,
    ab_reduction: Option<(bool, f64)>,
}

fn scan_one(psi: &PureState, tol: f64) -> Result<ScanOutcome> {
    let bc = reduce(psi, &[1, 2])?;
    let ab = reduce(psi, &[0, 1])?;
    let hit = check_reduction(&bc, tol)?.status == Status::Holds
        && check_spectral(&ab)?.majorization.status == Status::Holds;
    if !hit {
        return Ok(ScanOutcome { hit, ab_reduction: None });
    }
    let v = check_reduction(&ab, tol)?;
    let min = match v.evidence {
        criteria::Evidence::MinEigenvalue(x) => x,
        _ => f64::NAN,
    };
    Ok(ScanOutcome {
        hit,
        ab_reduction: Some((v.status == Status::Holds, min)),
    })
}

/// Per-trial seed derived from the scan seed.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x2545_F491_4F6C_DD1D).wrapping_add(index as u64 + 1)
}

/// Samples random 3×3×3 pure states (plus any injected ones) and looks for
/// states where `ρ_BC` satisfies reduction, `ρ_AB` satisfies majorization
/// but `ρ_AB` violates reduction. Exploratory: nothing is asserted.
pub fn conjecture_scan(
    trials: usize,
    seed: u64,
    injected: &[PureState],
    dump_dir: Option<&Path>,
    tol: f64,
) -> Result<ConjectureReport> {
    if trials == 0 {
        return Err(Error::InvalidParameters("conjecture scan needs at least one trial".into()));
    }
    for psi in injected {
        if psi.num_parties() != 3 {
            return Err(Error::InvalidParties("injected states must be tripartite".into()));
        }
    }
    let total = injected.len() + trials;
    let outcomes: Vec<Result<(ScanOutcome, Option<PureState>)>> = (0..total)
        .into_par_iter()
        .map(|k| {
            let psi = if k < injected.len() {
                injected[k].clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, k - injected.len()));
                random_pure_state(&[3, 3, 3], &mut rng)
            };
            let out = scan_one(&psi, tol)?;
            let keep = matches!(out.ab_reduction, Some((false, _))).then_some(psi);
            Ok((out, keep))
        })
        .collect();
    let mut report = ConjectureReport {
        trials,
        seed,
        injected: injected.len(),
        filter_hits: 0,
        reduction_holds: 0,
        counterexamples: Vec::new(),
    };
    for (k, res) in outcomes.into_iter().enumerate() {
        let (out, keep) = res?;
        if out.hit {
            report.filter_hits += 1;
        }
        match (out.ab_reduction, keep) {
            (Some((true, _)), _) => report.reduction_holds += 1,
            (Some((false, min)), Some(psi)) => {
                let source = if k < injected.len() {
                    format!("injected #{k}")
                } else {
                    format!("trial {} (seed {})", k - injected.len(), trial_seed(seed, k - injected.len()))
                };
                let dump = match dump_dir {
                    Some(dir) => {
                        let path = dir.join(format!("conjecture_candidate_{k:05}.json"));
                        let meta = serde_json::json!({ "source": source, "scan_seed": seed, "index": k });
                        statefile::save_state(&path, &psi, Some(meta))?;
                        Some(path)
                    }
                    None => None,
                };
                report.counterexamples.push(ScanCounterexample {
                    index: k,
                    source,
                    reduction_min_eigenvalue: min,
                    dump,
                });
            }
            _ => {}
        }
    }
    Ok(report)
}

/// Amplitude helper used by tests and suites.
pub fn amplitude_distance(a: &PureState, b: &PureState) -> f64 {
    a.amps()
        .iter()
        .zip(b.amps())
        .map(|(x, y): (&C64, &C64)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// PPT status of each pair, in `(AB, BC, CA)` order.
pub fn pair_ppt(psi: &PureState, tol: f64) -> Result<[Status; 3]> {
    let mut out = [Status::Unknown; 3];
    for (k, &(x, y)) in PAIRS.iter().enumerate() {
        out[k] = check_ppt(&reduce(psi, &[x, y])?, tol)?.status;
    }
    Ok(out)
}
