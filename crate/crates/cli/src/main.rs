//! `enthier` command-line front end.
//!
//! Exit codes: 0 for a decisive result, 1 for usage, parse and I/O errors,
//! 2 when the science is undecided or a verification suite fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use enthier::classify::{
    check_table_constraints, classify_tripartite, monoid_product, predict_product_class, product_certificate,
    tensor_rank_bounds, triple_string, TripleClass, EQUAL_WEIGHTS, PAIRS,
};
use enthier::criteria::{ClassLabel, Settings, Status};
use enthier::families::{make_family, Certificate, Family};
use enthier::linalg::DEFAULT_TOL;
use enthier::multipartite::{max_ghz_order, verify_ghz_equivalence};
use enthier::petz::{choose_orientation, run_pipeline};
use enthier::qstate::PureState;
use enthier::statefile::{save_state, StateFile};
use enthier::suites::{run_suite, SuiteOptions};

const PAIR_NAMES: [&str; 3] = ["AB", "BC", "CA"];

#[derive(Parser)]
#[command(name = "enthier", version, about = "Entanglement hierarchy classification and verification")]
struct Cli {
    /// Numerical tolerance for eigenvalue tests.
    #[arg(long, global = true, env = "ENTHIER_TOL", default_value_t = DEFAULT_TOL)]
    tol: f64,

    /// Seed for every randomized subroutine.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print the machine-readable report instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Also write the machine-readable report to this file.
    #[arg(long, global = true, value_name = "PATH")]
    report: Option<PathBuf>,

    /// Rescale input states whose norm is off by more than 1e-6.
    #[arg(long, global = true)]
    normalize: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the three reduced pairs of a tripartite state file.
    Classify { input: PathBuf },

    /// Construct a named state family.
    Family {
        name: String,
        /// Positional parameters; lists are comma separated, rows split by `;`.
        #[arg(allow_negative_numbers = true)]
        params: Vec<String>,
        /// Output path; the state goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Run a verification suite (`all` runs every suite).
    Verify {
        suite: String,
        #[arg(long)]
        trials: Option<usize>,
        /// Where the conjecture scan writes candidate states.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },

    /// Weighted direct sum of two tripartite states, then classification.
    Monoid {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Extension, Petz recovery and separable extraction.
    Petz {
        input: PathBuf,
        /// `auto`, or the parties playing A, B and C, as in `1,0,2`.
        #[arg(long, default_value = "auto")]
        orientation: String,
    },

    /// Bipartition, separability and GHZ-form checks on an N-party state.
    Multipartite {
        input: PathBuf,
        /// Number of leading parties in the GHZ block (defaults to all).
        #[arg(long)]
        n: Option<usize>,
    },
}

/// Text and machine-readable renderings of one command's result.
struct Output {
    text: String,
    report: Value,
    code: u8,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        bail!("--tol must be a positive number, got {}", cli.tol);
    }
    let start = Instant::now();
    let out = match &cli.command {
        Command::Classify { input } => classify(cli, input)?,
        Command::Family { name, params, out } => family(name, params, out.as_deref())?,
        Command::Verify { suite, trials, dump_dir } => verify(cli, suite, *trials, dump_dir.clone())?,
        Command::Monoid { left, right, out } => monoid(cli, left, right, out.as_deref())?,
        Command::Petz { input, orientation } => petz(cli, input, orientation)?,
        Command::Multipartite { input, n } => multipartite(cli, input, *n)?,
    };
    let mut report = out.report;
    if let Value::Object(map) = &mut report {
        map.insert("tol".into(), json!(cli.tol));
        map.insert("seed".into(), json!(cli.seed));
        map.insert("elapsed_ms".into(), json!(start.elapsed().as_secs_f64() * 1e3));
        map.insert("exit_code".into(), json!(out.code));
    }
    if let Some(path) = &cli.report {
        let text = serde_json::to_string_pretty(&report)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", out.text);
    }
    Ok(out.code)
}

fn settings(cli: &Cli) -> Settings {
    Settings {
        tol: cli.tol,
        seed: cli.seed.unwrap_or(0),
        ..Settings::default()
    }
}

fn load(path: &Path, normalize: bool) -> anyhow::Result<(PureState, Option<Certificate>)> {
    let file = StateFile::read(path).with_context(|| format!("reading {}", path.display()))?;
    let psi = file.to_state(normalize).with_context(|| format!("loading {}", path.display()))?;
    let cert = file
        .metadata
        .as_ref()
        .and_then(|m| m.get("certificate"))
        .map(|c| serde_json::from_value::<Certificate>(c.clone()))
        .transpose()
        .with_context(|| format!("{}: malformed certificate in metadata", path.display()))?;
    Ok((psi, cert))
}

fn require_tripartite(psi: &PureState, path: &Path) -> anyhow::Result<()> {
    if psi.num_parties() != 3 {
        bail!(
            "{} has {} parties; this command needs a tripartite state (see `multipartite`)",
            path.display(),
            psi.num_parties()
        );
    }
    Ok(())
}

fn headline(t: &TripleClass) -> String {
    let mut s = t.to_string();
    if t.certificate_based() {
        s.push_str(" (separability: certificate)");
    }
    s
}

fn undecided_pairs(t: &TripleClass) -> Vec<String> {
    t.raw
        .iter()
        .zip(PAIR_NAMES)
        .filter(|(l, _)| !l.is_decisive())
        .map(|(l, name)| match l {
            ClassLabel::NCandidate => format!("{name} is N_candidate"),
            _ => format!("{name} is Indeterminate"),
        })
        .collect()
}

/// Classification text and report for a tripartite state.
fn classification(psi: &PureState, cert: Option<&Certificate>, settings: &Settings) -> anyhow::Result<Output> {
    let t = classify_tripartite(psi, cert, settings)?;
    let ranks = psi.local_ranks(settings.tol)?;
    let ranks = [ranks[0], ranks[1], ranks[2]];
    let bounds = tensor_rank_bounds(psi, cert.and_then(|c| c.rank_upper), Some(&t), settings.tol);
    let mut text = format!("{}\n", headline(&t));
    for (k, pc) in t.pairs.iter().enumerate() {
        let (x, y) = PAIRS[k];
        text.push_str(&format!("  {} (parties {x},{y}): {}\n", PAIR_NAMES[k], pc.label.letter()));
        for v in &pc.justification {
            text.push_str(&format!("      {v}\n"));
        }
        if let Some(w) = &pc.witness {
            let mark = if w.verified { "verified" } else { "unverified" };
            text.push_str(&format!("      witness ({mark}): {}\n", w.summary()));
        }
    }
    text.push_str(&format!("  local ranks: {ranks:?}\n"));
    let table = match &bounds {
        Ok(b) => {
            text.push_str(&format!("  tensor rank: {b}\n"));
            let tr = check_table_constraints(&t.raw, b, ranks);
            for c in &tr.checks {
                text.push_str(&format!("  {} {}\n", if c.pass { "ok  " } else { "FAIL" }, c.relation));
            }
            if tr.contradiction {
                text.push_str(&format!("  S_{} is not an essential subset\n", tr.canonical));
            }
            Some(tr)
        }
        Err(e) => {
            text.push_str(&format!("  tensor rank: {e}\n"));
            None
        }
    };
    if let Some(c) = cert {
        text.push_str(&format!("  certificate: {c}\n"));
    }
    let undecided = undecided_pairs(&t);
    for u in &undecided {
        text.push_str(&format!("  undecided: {u}\n"));
    }
    let report = json!({
        "command": "classify",
        "dims": psi.dims(),
        "class": t.raw_string(),
        "canonical": t.canonical_string(),
        "headline": headline(&t),
        "decisive": t.is_decisive(),
        "undecided": undecided,
        "classification": t,
        "local_ranks": ranks,
        "rank_bounds": bounds.as_ref().ok(),
        "rank_bounds_error": bounds.as_ref().err().map(|e| e.to_string()),
        "table": table,
        "certificate": cert,
    });
    Ok(Output {
        text,
        report,
        code: if t.is_decisive() { 0 } else { 2 },
    })
}

fn classify(cli: &Cli, input: &Path) -> anyhow::Result<Output> {
    let (psi, cert) = load(input, cli.normalize)?;
    require_tripartite(&psi, input)?;
    let mut out = classification(&psi, cert.as_ref(), &settings(cli))?;
    out.report["input"] = json!(input.display().to_string());
    Ok(out)
}

fn family(name: &str, params: &[String], out: Option<&Path>) -> anyhow::Result<Output> {
    let fam = Family::parse(name, params)?;
    let (psi, cert) = make_family(&fam)?;
    let meta = json!({
        "family": fam.name(),
        "params": serde_json::to_value(&fam)?,
        "certificate": cert,
    });
    let file = StateFile::from_state(&psi, Some(meta.clone()));
    let text = match out {
        Some(path) => {
            file.write(path).with_context(|| format!("writing {}", path.display()))?;
            format!("wrote {} with dims {:?} to {}\n  {cert}\n", fam.name(), psi.dims(), path.display())
        }
        None => file.to_canonical_string(),
    };
    Ok(Output {
        text,
        report: json!({
            "command": "family",
            "family": fam.name(),
            "dims": psi.dims(),
            "out": out.map(|p| p.display().to_string()),
            "metadata": meta,
        }),
        code: 0,
    })
}

fn verify(cli: &Cli, suite: &str, trials: Option<usize>, dump_dir: Option<PathBuf>) -> anyhow::Result<Output> {
    let opts = SuiteOptions {
        trials,
        seed: cli.seed.unwrap_or(SuiteOptions::default().seed),
        settings: settings(cli),
        dump_dir,
    };
    let reports = run_suite(suite, &opts)?;
    let pass = reports.iter().all(|r| r.pass());
    let mut text: String = reports.iter().map(|r| r.to_string()).collect();
    text.push_str(if pass { "verify: pass\n" } else { "verify: FAIL\n" });
    Ok(Output {
        text,
        report: json!({
            "command": "verify",
            "suite": suite,
            "pass": pass,
            "reports": reports,
        }),
        code: if pass { 0 } else { 2 },
    })
}

fn monoid(cli: &Cli, left: &Path, right: &Path, out: Option<&Path>) -> anyhow::Result<Output> {
    let (a, ca) = load(left, cli.normalize)?;
    let (b, cb) = load(right, cli.normalize)?;
    require_tripartite(&a, left)?;
    require_tripartite(&b, right)?;
    let psi = monoid_product(&a, &b, EQUAL_WEIGHTS)?;
    let cert = ca.as_ref().zip(cb.as_ref()).map(|(x, y)| product_certificate(x, y));
    let settings = settings(cli);
    let ta = classify_tripartite(&a, ca.as_ref(), &settings)?;
    let tb = classify_tripartite(&b, cb.as_ref(), &settings)?;
    let predicted = predict_product_class(&ta.raw, &tb.raw);
    let mut res = classification(&psi, cert.as_ref(), &settings)?;
    let obtained = res.report["class"].as_str().unwrap_or_default().to_string();
    let agrees = obtained == triple_string(&predicted);
    let mut text = format!(
        "S_{} * S_{} -> predicted S_{}, obtained {}\n",
        ta.raw_string(),
        tb.raw_string(),
        triple_string(&predicted),
        res.text.lines().next().unwrap_or_default()
    );
    text.push_str(&res.text);
    if let Some(path) = out {
        let meta = json!({
            "family": "monoid_product",
            "params": { "left": left.display().to_string(), "right": right.display().to_string() },
            "certificate": cert,
        });
        save_state(path, &psi, Some(meta)).with_context(|| format!("writing {}", path.display()))?;
        text.push_str(&format!("  wrote product to {}\n", path.display()));
    }
    res.report["command"] = json!("monoid");
    res.report["factors"] = json!([ta.raw_string(), tb.raw_string()]);
    res.report["predicted"] = json!(triple_string(&predicted));
    res.report["agrees_with_prediction"] = json!(agrees);
    if !agrees && res.code == 0 {
        res.code = 2;
    }
    Ok(Output { text, ..res })
}

fn parse_orientation(s: &str) -> anyhow::Result<[usize; 3]> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("orientation {s:?} is not `auto` or three comma-separated parties"))?;
    let mut sorted = parts.clone();
    sorted.sort_unstable();
    if sorted != [0, 1, 2] {
        bail!("orientation {s:?} is not a permutation of 0,1,2");
    }
    Ok([parts[0], parts[1], parts[2]])
}

fn petz(cli: &Cli, input: &Path, orientation: &str) -> anyhow::Result<Output> {
    let (psi, _) = load(input, cli.normalize)?;
    require_tripartite(&psi, input)?;
    let orientation = if orientation == "auto" {
        match choose_orientation(&psi, cli.tol)? {
            Some(o) => o,
            None => {
                return Ok(Output {
                    text: "no party ordering has a separable B-C pair with a known decomposition\n".into(),
                    report: json!({ "command": "petz", "orientation": Value::Null }),
                    code: 2,
                })
            }
        }
    } else {
        parse_orientation(orientation)?
    };
    let rep = match run_pipeline(&psi, orientation, cli.tol) {
        Ok(r) => r,
        Err(enthier::Error::Precondition(msg)) => {
            return Ok(Output {
                text: format!("orientation {orientation:?}: {msg}\n"),
                report: json!({ "command": "petz", "orientation": orientation, "error": msg }),
                code: 2,
            })
        }
        Err(e) => return Err(e.into()),
    };
    // The recovery is exact precisely when the entropy equality holds.
    let predicted_exact = rep.entropy_gap.abs() <= enthier::criteria::EQUALITY_TOL;
    let consistent = rep.exact(1e-8) == predicted_exact;
    let mut text = format!("orientation (A, B, C) = {:?}\n", rep.orientation);
    text.push_str(&format!("  decomposition terms:   {}\n", rep.terms));
    text.push_str(&format!("  entropy gap (bits):    {:.3e}\n", rep.entropy_gap));
    text.push_str(&format!("  isometry defect:       {:.3e}\n", rep.isometry_defect));
    text.push_str(&format!("  Choi min eigenvalue:   {:.3e}\n", rep.choi_min_eigenvalue));
    text.push_str(&format!("  trace defect:          {:.3e}\n", rep.trace_defect));
    text.push_str(&format!("  recovery deviation:    {:.3e}\n", rep.recovery_deviation));
    match (&rep.extraction, &rep.refusal) {
        (Some(x), _) => {
            text.push_str(&format!("  extracted {} separable terms for A-B", x.decomposition.len()));
            if let Some(e) = rep.rebuild_error {
                text.push_str(&format!(", rebuild error {e:.3e}"));
            }
            if let Some(e) = rep.weight_error {
                text.push_str(&format!(", weight error {e:.3e}"));
            }
            text.push('\n');
        }
        (None, Some(msg)) => text.push_str(&format!("  extraction refused: {msg}\n")),
        (None, None) => {}
    }
    if !consistent {
        text.push_str("  recovery exactness disagrees with the entropy gap\n");
    }
    Ok(Output {
        text,
        report: json!({
            "command": "petz",
            "input": input.display().to_string(),
            "consistent": consistent,
            "pipeline": rep,
        }),
        code: if consistent { 0 } else { 2 },
    })
}

fn multipartite(cli: &Cli, input: &Path, n: Option<usize>) -> anyhow::Result<Output> {
    let (psi, _) = load(input, cli.normalize)?;
    let n = n.unwrap_or(psi.num_parties());
    let rep = verify_ghz_equivalence(&psi, n, cli.tol)?;
    let order = max_ghz_order(&psi, cli.tol)?;
    let mut text = format!("{} parties, GHZ block of the first {n}\n", rep.parties);
    for c in &rep.reduced {
        let failing: Vec<String> = c.bipartitions.failing().map(|v| format!("{:?}", v.left)).collect();
        text.push_str(&format!(
            "  without party {}: all cuts PPT {:?}, fully separable {:?} ({})",
            c.removed, c.bipartitions.overall, c.fully_separable, c.separability_reason
        ));
        if !failing.is_empty() {
            text.push_str(&format!(", NPT cuts {}", failing.join(" ")));
        }
        text.push('\n');
    }
    text.push_str(&format!("  non-distillable:   {:?}\n", rep.non_distillable));
    text.push_str(&format!("  all PPT:           {:?}\n", rep.all_ppt));
    text.push_str(&format!("  fully separable:   {:?}\n", rep.fully_separable));
    text.push_str(&format!("  GHZ form:          {:?}\n", rep.ghz_form));
    if let Some(form) = rep.detection.form() {
        text.push_str(&format!(
            "  weights {:?}, reconstruction error {:.3e}\n",
            form.p, form.reconstruction_error
        ));
    }
    match order {
        Some(k) => text.push_str(&format!("  largest GHZ order: {k}\n")),
        None => text.push_str("  no GHZ form for any n\n"),
    }
    for d in &rep.disagreements {
        text.push_str(&format!("  DISAGREEMENT: {d}\n"));
    }
    let decided = rep.statuses().iter().all(|s| *s != Status::Unknown);
    let code = if rep.consistent() && decided { 0 } else { 2 };
    Ok(Output {
        text,
        report: json!({
            "command": "multipartite",
            "input": input.display().to_string(),
            "max_ghz_order": order,
            "equivalence": rep,
        }),
        code,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use enthier::families::FAMILY_NAMES;

    #[test]
    fn orientation_parsing() {
        assert_eq!(parse_orientation("1,0,2").unwrap(), [1, 0, 2]);
        assert!(parse_orientation("0,0,2").is_err());
        assert!(parse_orientation("a,b,c").is_err());
        assert!(parse_orientation("0,1").is_err());
    }

    #[test]
    fn family_names_cover_parser() {
        for name in FAMILY_NAMES {
            match Family::parse(name, &[]) {
                Ok(f) => assert_eq!(f.name(), *name),
                Err(enthier::Error::InvalidParameters(_)) => {}
                Err(e) => panic!("{name}: {e}"),
            }
        }
    }

    #[test]
    fn cli_definition_is_valid() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
