//! Command-line front end: `solve`, `lemma` and `verify`.
//!
//! Exit codes: 0 success, 1 invalid input, 2 search failure (an inconclusive result is
//! still written), 3 verification failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kkm::solve_dragon_kkm;
use crate::marriage::{dragon_condition_witness, spanning_tree_representatives, SetFamily};
use crate::params::Params;
use crate::scenario::{
    resolve_piece_grab, resolve_player_swallow, solve_scenario_piece_classical, solve_scenario_player_classical,
    verify_envy_free, Scenario, ScenarioResult,
};
use crate::valuation::{random_profile, Regime, ValuationProfile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_SEARCH: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

pub const SEED_ENV: &str = "DRAGONSHARE_SEED";

#[derive(Debug, Parser)]
#[command(name = "dragonshare", version, about = "Envy-free interval division with a dragon")]
pub struct Cli {
    /// Worker threads for the search (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scenario described by a JSON config.
    Solve {
        #[arg(long, value_enum)]
        scenario: Option<ScenarioKind>,
        #[arg(long)]
        config: PathBuf,
        /// Result file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the dragon marriage condition and build a tree of representatives.
    Lemma {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check every outcome of a result file against a profile.
    Verify {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    PieceGrab,
    PlayerSwallow,
    Kkm,
    Lemma,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomProfileSpec {
    pub seed: u64,
    pub players: usize,
    pub regime: Regime,
    #[serde(default = "default_pieces")]
    pub pieces: usize,
}

fn default_pieces() -> usize {
    4
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Option<ScenarioKind>,
    /// Number of boxes (pieces for `kkm`, elements for `lemma`).
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default)]
    pub profile: Option<ValuationProfile>,
    /// Resolved against the config file's directory.
    #[serde(default)]
    pub profile_path: Option<PathBuf>,
    #[serde(default)]
    pub random_profile: Option<RandomProfileSpec>,
    #[serde(default)]
    pub family: Option<SetFamily>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut config: RunConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        if let (Some(rel), Some(dir)) = (config.profile_path.as_ref(), path.parent()) {
            config.profile_path = Some(dir.join(rel));
        }
        Ok(config)
    }

    fn resolve_profile(&self) -> Result<ValuationProfile> {
        let given = [
            self.profile.is_some(),
            self.profile_path.is_some(),
            self.random_profile.is_some(),
        ];
        if given.iter().filter(|g| **g).count() != 1 {
            return Err(Error::Invalid(
                "give exactly one of profile, profile_path, random_profile".into(),
            ));
        }
        if let Some(p) = &self.profile {
            return ValuationProfile::new(p.players.clone(), p.regime);
        }
        if let Some(path) = &self.profile_path {
            return ValuationProfile::from_json(&fs::read_to_string(path)?);
        }
        let spec = self.random_profile.as_ref().expect("checked above");
        random_profile(spec.seed, spec.players, spec.regime, spec.pieces)
    }
}

/// What a command produced: an exit code and the document to emit.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub code: i32,
    pub json: String,
    pub message: Option<String>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<&'a str>,
    #[serde(flatten)]
    body: &'a T,
    params: &'a Params,
}

fn envelope<T: Serialize>(status: &str, scenario: Option<&str>, body: &T, params: &Params) -> String {
    let mut s = serde_json::to_string_pretty(&Envelope {
        status,
        scenario,
        body,
        params,
    })
    .expect("results always serialize");
    s.push('\n');
    s
}

fn invalid(e: impl std::fmt::Display) -> RunOutput {
    RunOutput {
        code: EXIT_INVALID,
        json: String::new(),
        message: Some(e.to_string()),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SearchFailed { .. }
        | Error::EnvyFailed { .. }
        | Error::ConditionViolated { .. }
        | Error::Internal(_) => EXIT_SEARCH,
        _ => EXIT_INVALID,
    }
}

/// Seed from `DRAGONSHARE_SEED` if set.
pub fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Invalid(format!("{SEED_ENV}={s} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Runs a solve. `scenario` overrides the config's scenario.
pub fn run(config: &RunConfig, scenario: Option<ScenarioKind>, seed: Option<u64>) -> RunOutput {
    let Some(kind) = scenario.or(config.scenario) else {
        return invalid("no scenario given in the config or on the command line");
    };
    let mut params = config.params.clone();
    if let Some(seed) = seed {
        params.seed = seed;
    }
    if kind == ScenarioKind::Lemma {
        return match &config.family {
            Some(f) => run_lemma(f),
            None => invalid("the lemma scenario needs a family"),
        };
    }
    let profile = match config.resolve_profile() {
        Ok(p) => p,
        Err(e) => return invalid(e),
    };
    let players = profile.player_count();
    let expected_r = match kind {
        ScenarioKind::PieceGrab => players + 1,
        ScenarioKind::PlayerSwallow => players.saturating_sub(1),
        ScenarioKind::Kkm => players + 1,
        ScenarioKind::Lemma => unreachable!(),
    };
    if let Some(r) = config.r {
        if r != expected_r {
            return invalid(format!(
                "{players} players do not match r = {r} for this scenario (expected r = {expected_r})"
            ));
        }
    }
    let scenario_name = match kind {
        ScenarioKind::PieceGrab => "piece-grab",
        ScenarioKind::PlayerSwallow => "player-swallow",
        ScenarioKind::Kkm => "kkm",
        ScenarioKind::Lemma => "lemma",
    };
    let outcome = match kind {
        ScenarioKind::PieceGrab => {
            solve_scenario_piece_classical(&profile, &params).map(|r| envelope("ok", None, &r, &params))
        }
        ScenarioKind::PlayerSwallow => {
            solve_scenario_player_classical(&profile, &params).map(|r| envelope("ok", None, &r, &params))
        }
        ScenarioKind::Kkm => solve_dragon_kkm(&profile, &params).map(|s| envelope("ok", Some("kkm"), &s, &params)),
        ScenarioKind::Lemma => unreachable!(),
    };
    match outcome {
        Ok(json) => RunOutput {
            code: EXIT_OK,
            json,
            message: None,
        },
        Err(e) => {
            let code = exit_code(&e);
            if code == EXIT_INVALID {
                return invalid(e);
            }
            #[derive(Serialize)]
            struct Inconclusive<'a> {
                message: String,
                #[serde(skip_serializing_if = "Option::is_none")]
                best: Option<&'a crate::search::BalancedPoint>,
            }
            let best = match &e {
                Error::SearchFailed { best } => Some(best.as_ref()),
                _ => None,
            };
            let body = Inconclusive {
                message: e.to_string(),
                best,
            };
            RunOutput {
                code,
                json: envelope("inconclusive", Some(scenario_name), &body, &params),
                message: Some(e.to_string()),
            }
        }
    }
}

#[derive(Serialize)]
struct LemmaReport {
    status: &'static str,
    holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<(usize, usize)>>,
}

pub fn run_lemma(family: &SetFamily) -> RunOutput {
    let family = match SetFamily::new(family.n(), family.sets().to_vec()) {
        Ok(f) => f,
        Err(e) => return invalid(e),
    };
    let render = |r: &LemmaReport| serde_json::to_string_pretty(r).expect("serializes") + "\n";
    if let Some(witness) = dragon_condition_witness(&family) {
        let msg = format!("condition violated by sets {witness:?}");
        let report = LemmaReport {
            status: "violated",
            holds: false,
            witness: Some(witness),
            pairs: None,
        };
        return RunOutput {
            code: EXIT_INVALID,
            json: render(&report),
            message: Some(msg),
        };
    }
    match spanning_tree_representatives(&family) {
        Ok(tree) => {
            let report = LemmaReport {
                status: "ok",
                holds: true,
                witness: None,
                pairs: Some(tree.pairs),
            };
            RunOutput {
                code: EXIT_OK,
                json: render(&report),
                message: None,
            }
        }
        Err(e) => RunOutput {
            code: exit_code(&e),
            json: String::new(),
            message: Some(e.to_string()),
        },
    }
}

#[derive(Serialize)]
struct OutcomeCheck {
    dragon: usize,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

#[derive(Serialize)]
struct VerifyReport {
    status: &'static str,
    tol: f64,
    min_margin: f64,
    outcomes: Vec<OutcomeCheck>,
}

/// Re-checks every recorded outcome: each assignment must be the tree's resolution of
/// that dragon action, and envy-free on the recorded partition at `tol`.
pub fn run_verify(result: &ScenarioResult, profile: &ValuationProfile, tol: f64) -> RunOutput {
    if !(tol >= 0.0) {
        return invalid(format!("tol must be nonnegative, got {tol}"));
    }
    let r = result.partition.r();
    let expected = match result.scenario {
        Scenario::PieceGrab => r - 1,
        Scenario::PlayerSwallow => r + 1,
    };
    if profile.player_count() != expected || result.r != r {
        return invalid(format!(
            "profile has {} players but the {} result with r = {} needs {expected}",
            profile.player_count(),
            result.scenario.name(),
            result.r
        ));
    }
    let mut checks = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut seen = vec![false; result.scenario.dragon_choices(r) + 1];
    for o in &result.outcomes {
        let mut check = OutcomeCheck {
            dragon: o.dragon,
            passed: false,
            min_margin: None,
            reason: None,
        };
        let resolved = match result.scenario {
            Scenario::PieceGrab => resolve_piece_grab(&result.tree, o.dragon),
            Scenario::PlayerSwallow => resolve_player_swallow(&result.tree, o.dragon),
        };
        match resolved {
            Ok(a) if a == o.assignment => {}
            Ok(_) => check.reason = Some("assignment differs from the tree's resolution".into()),
            Err(e) => check.reason = Some(e.to_string()),
        }
        if o.assignment.dragon != o.dragon {
            check.reason = Some("assignment names a different dragon action".into());
        }
        if let Some(flag) = seen.get_mut(o.dragon) {
            *flag = true;
        }
        match verify_envy_free(profile, &result.partition, result.scenario, &o.assignment, tol) {
            Ok(report) => {
                min_margin = min_margin.min(report.min_margin);
                check.min_margin = Some(report.min_margin);
                if !report.passed && check.reason.is_none() {
                    check.reason = Some(format!(
                        "player {} envies at margin {:e}",
                        report.worst_player, report.min_margin
                    ));
                }
            }
            Err(e) => check.reason = check.reason.or(Some(e.to_string())),
        }
        check.passed = check.reason.is_none();
        checks.push(check);
    }
    for (dragon, flag) in seen.iter().enumerate().skip(1) {
        if !flag {
            checks.push(OutcomeCheck {
                dragon,
                passed: false,
                min_margin: None,
                reason: Some("no outcome recorded for this dragon action".into()),
            });
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    let report = VerifyReport {
        status: if passed { "pass" } else { "fail" },
        tol,
        min_margin,
        outcomes: checks,
    };
    let json = serde_json::to_string_pretty(&report).expect("serializes") + "\n";
    let message = (!passed).then(|| {
        let bad: Vec<String> = report
            .outcomes
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("dragon {}: {}", c.dragon, c.reason.as_deref().unwrap_or("")))
            .collect();
        bad.join("; ")
    });
    RunOutput {
        code: if passed { EXIT_OK } else { EXIT_VERIFY },
        json,
        message,
    }
}

fn emit(output: &RunOutput, out: Option<&Path>) -> i32 {
    if let Some(msg) = &output.message {
        eprintln!("dragonshare: {msg}");
    }
    if output.json.is_empty() {
        return output.code;
    }
    match out {
        Some(path) => {
            if let Err(e) = fs::write(path, &output.json) {
                eprintln!("dragonshare: cannot write {}: {e}", path.display());
                return EXIT_INVALID;
            }
        }
        None => print!("{}", output.json),
    }
    output.code
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("dragonshare: cannot configure {n} threads: {e}");
            return EXIT_INVALID;
        }
    }
    match cli.command {
        Command::Solve { scenario, config, out } => {
            let config = match RunConfig::from_file(&config) {
                Ok(c) => c,
                Err(e) => return emit(&invalid(format!("{}: {e}", config.display())), None),
            };
            let seed = match seed_override() {
                Ok(s) => s,
                Err(e) => return emit(&invalid(e), None),
            };
            let out = out.or_else(|| config.output.clone());
            emit(&run(&config, scenario, seed), out.as_deref())
        }
        Command::Lemma { input, out } => {
            let family = fs::read_to_string(&input)
                .map_err(Error::from)
                .and_then(|text| serde_json::from_str::<SetFamily>(&text).map_err(Error::from));
            match family {
                Ok(f) => emit(&run_lemma(&f), out.as_deref()),
                Err(e) => emit(&invalid(format!("{}: {e}", input.display())), None),
            }
        }
        Command::Verify { result, profile, tol } => {
            let parsed = fs::read_to_string(&result)
                .map_err(Error::from)
                .and_then(|t| serde_json::from_str::<ScenarioResult>(&t).map_err(Error::from))
                .and_then(|r| {
                    let p = ValuationProfile::from_json(&fs::read_to_string(&profile)?)?;
                    Ok((r, p))
                });
            match parsed {
                Ok((r, p)) => emit(&run_verify(&r, &p, tol), None),
                Err(e) => emit(&invalid(e), None),
            }
        }
    }
}
