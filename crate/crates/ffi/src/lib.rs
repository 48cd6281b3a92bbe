//! C interface to the dragonshare solvers.
//!
//! Profiles and results are opaque handles owned by the caller and released with
//! their `_free` function. Every fallible call returns a [`DsStatus`]; on failure
//! [`ds_last_error`] describes what went wrong on the calling thread. Strings handed
//! out by the library are released with [`ds_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dragonshare::cli::{run_lemma, run_verify, EXIT_OK, EXIT_VERIFY};
use dragonshare::kkm::{solve_dragon_kkm, KkmSolution};
use dragonshare::scenario::{solve_scenario_piece_classical, solve_scenario_player_classical, ScenarioResult};
use dragonshare::valuation::random_profile;
use dragonshare::{Error, Params, Regime, SetFamily, ValuationProfile};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DsStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    SearchFailed = 3,
    EnvyFailed = 4,
    ConditionViolated = 5,
    Internal = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DsScenario {
    /// `r - 1` players, the dragon grabs one of `r` pieces.
    PieceGrab = 0,
    /// `r + 1` players, the dragon swallows one of them.
    PlayerSwallow = 1,
    /// `n` players over `n + 1` pieces, classical balancing only.
    Kkm = 2,
}

/// Solver parameters; start from [`ds_params_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DsParams {
    pub tol: f64,
    pub budget: u64,
    pub eps_fuzz: f64,
    pub eps_sign: f64,
    pub seed: u64,
    pub envy_tol: f64,
}

impl From<DsParams> for Params {
    fn from(p: DsParams) -> Self {
        Params {
            tol: p.tol,
            budget: p.budget,
            eps_fuzz: p.eps_fuzz,
            eps_sign: p.eps_sign,
            seed: p.seed,
            envy_tol: p.envy_tol,
        }
    }
}

/// A valuation profile.
pub struct DsProfile(ValuationProfile);

enum Solved {
    Scenario(ScenarioResult),
    Kkm(KkmSolution),
}

/// A solved instance.
pub struct DsResult(Solved);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> DsStatus {
    match e {
        Error::SearchFailed { .. } => DsStatus::SearchFailed,
        Error::EnvyFailed { .. } => DsStatus::EnvyFailed,
        Error::ConditionViolated { .. } => DsStatus::ConditionViolated,
        Error::Internal(_) | Error::PartitionEquivalence(_) => DsStatus::Internal,
        _ => DsStatus::InvalidArgument,
    }
}

fn fail(status: DsStatus, msg: impl Into<String>) -> DsStatus {
    set_error(msg);
    status
}

/// Runs `body`, turning panics into [`DsStatus::Panic`].
fn guard(body: impl FnOnce() -> DsStatus) -> DsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(DsStatus::Panic, msg)
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, DsStatus> {
    if s.is_null() {
        return Err(fail(DsStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(DsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn give_string(s: String, out: *mut *mut c_char) -> DsStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            DsStatus::Ok
        }
        Err(_) => fail(DsStatus::Internal, "output contains a nul byte"),
    }
}

/// The default parameters.
#[no_mangle]
pub extern "C" fn ds_params_default() -> DsParams {
    let p = Params::default();
    DsParams {
        tol: p.tol,
        budget: p.budget,
        eps_fuzz: p.eps_fuzz,
        eps_sign: p.eps_sign,
        seed: p.seed,
        envy_tol: p.envy_tol,
    }
}

/// Message for the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn ds_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ds_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a profile: `{"players": [{"breakpoints": [...], "values": [...]}], "regime": "hungry"|"signed"}`.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_profile_from_json(json: *const c_char, out: *mut *mut DsProfile) -> DsStatus {
    guard(|| {
        if out.is_null() {
            return fail(DsStatus::NullPointer, "out is null");
        }
        let text = match read_str(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ValuationProfile::from_json(text) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(DsProfile(p)));
                DsStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// A seeded random profile with `pieces` density steps per player. `signed_values`
/// nonzero allows negative densities.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_profile_random(
    seed: u64,
    players: usize,
    signed_values: c_int,
    pieces: usize,
    out: *mut *mut DsProfile,
) -> DsStatus {
    guard(|| {
        if out.is_null() {
            return fail(DsStatus::NullPointer, "out is null");
        }
        let regime = if signed_values != 0 {
            Regime::Signed
        } else {
            Regime::Hungry
        };
        match random_profile(seed, players, regime, pieces) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(DsProfile(p)));
                DsStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Number of players, or 0 for a null handle.
///
/// # Safety
/// `profile` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ds_profile_player_count(profile: *const DsProfile) -> usize {
    profile.as_ref().map_or(0, |p| p.0.player_count())
}

/// # Safety
/// `profile` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ds_profile_free(profile: *mut DsProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Solves a scenario. `params` may be null for the defaults. Every dragon action of a
/// returned piece-grab or player-swallow result has been checked envy-free.
///
/// # Safety
/// `profile` must be a live handle, `params` null or valid, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_solve(
    scenario: DsScenario,
    profile: *const DsProfile,
    params: *const DsParams,
    out: *mut *mut DsResult,
) -> DsStatus {
    guard(|| {
        if out.is_null() {
            return fail(DsStatus::NullPointer, "out is null");
        }
        let Some(profile) = profile.as_ref() else {
            return fail(DsStatus::NullPointer, "profile is null");
        };
        let params: Params = params.as_ref().map_or_else(Params::default, |p| (*p).into());
        let solved = match scenario {
            DsScenario::PieceGrab => solve_scenario_piece_classical(&profile.0, &params).map(Solved::Scenario),
            DsScenario::PlayerSwallow => solve_scenario_player_classical(&profile.0, &params).map(Solved::Scenario),
            DsScenario::Kkm => solve_dragon_kkm(&profile.0, &params).map(Solved::Kkm),
        };
        match solved {
            Ok(s) => {
                *out = Box::into_raw(Box::new(DsResult(s)));
                DsStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ds_result_free(result: *mut DsResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

fn cut_points(r: &DsResult) -> &[f64] {
    match &r.0 {
        Solved::Scenario(s) => s.cut.points(),
        Solved::Kkm(k) => k.cut.points(),
    }
}

/// Number of cut points, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ds_result_cut_len(result: *const DsResult) -> usize {
    result.as_ref().map_or(0, |r| cut_points(r).len())
}

/// Copies the cut points into `buf`, which holds `len` doubles.
///
/// # Safety
/// `result` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ds_result_cut(result: *const DsResult, buf: *mut f64, len: usize) -> DsStatus {
    guard(|| {
        let Some(r) = result.as_ref() else {
            return fail(DsStatus::NullPointer, "result is null");
        };
        if buf.is_null() {
            return fail(DsStatus::NullPointer, "buf is null");
        }
        let points = cut_points(r);
        if len < points.len() {
            return fail(
                DsStatus::InvalidArgument,
                format!("buffer holds {len} points, need {}", points.len()),
            );
        }
        ptr::copy_nonoverlapping(points.as_ptr(), buf, points.len());
        DsStatus::Ok
    })
}

/// Balance residual of the point the result was read from; NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ds_result_residual(result: *const DsResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| match &r.0 {
        Solved::Scenario(s) => s.residual,
        Solved::Kkm(k) => k.point.residual,
    })
}

/// Smallest envy margin over all dragon actions; NaN for KKM results and null handles.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ds_result_min_margin(result: *const DsResult) -> f64 {
    match result.as_ref().map(|r| &r.0) {
        Some(Solved::Scenario(s)) => s.min_margin(),
        _ => f64::NAN,
    }
}

/// Number of edges of the decision tree.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ds_result_edge_count(result: *const DsResult) -> usize {
    result.as_ref().map_or(0, |r| match &r.0 {
        Solved::Scenario(s) => s.tree.edges().len(),
        Solved::Kkm(k) => k.tree.edges().len(),
    })
}

/// Edge `index` (0-based) of the tree: endpoints `u < w` and its label, all 1-based.
///
/// # Safety
/// `result` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ds_result_edge(
    result: *const DsResult,
    index: usize,
    u: *mut usize,
    w: *mut usize,
    label: *mut usize,
) -> DsStatus {
    guard(|| {
        let Some(r) = result.as_ref() else {
            return fail(DsStatus::NullPointer, "result is null");
        };
        if u.is_null() || w.is_null() || label.is_null() {
            return fail(DsStatus::NullPointer, "an output pointer is null");
        }
        let edges = match &r.0 {
            Solved::Scenario(s) => s.tree.edges(),
            Solved::Kkm(k) => k.tree.edges(),
        };
        let Some(e) = edges.get(index) else {
            return fail(DsStatus::InvalidArgument, format!("edge {index} of {}", edges.len()));
        };
        (*u, *w, *label) = (e.u, e.w, e.label);
        DsStatus::Ok
    })
}

/// Who receives what when the dragon takes action `dragon` (1-based). Writes the box
/// of player `j` to `boxes[j - 1]`, and 0 for a player who gets nothing; `len` must be
/// at least the number of players.
///
/// # Safety
/// `result` must be a live handle and `boxes` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ds_result_assignment(
    result: *const DsResult,
    dragon: usize,
    boxes: *mut usize,
    len: usize,
) -> DsStatus {
    guard(|| {
        let Some(r) = result.as_ref() else {
            return fail(DsStatus::NullPointer, "result is null");
        };
        if boxes.is_null() {
            return fail(DsStatus::NullPointer, "boxes is null");
        }
        let (assignment, players) = match &r.0 {
            Solved::Scenario(s) => {
                let players = match s.scenario {
                    dragonshare::scenario::Scenario::PieceGrab => s.r - 1,
                    dragonshare::scenario::Scenario::PlayerSwallow => s.r + 1,
                };
                (
                    s.outcomes.iter().find(|o| o.dragon == dragon).map(|o| &o.assignment),
                    players,
                )
            }
            Solved::Kkm(k) => (
                k.bijections.iter().find(|a| a.dragon == dragon),
                k.tree.vertex_count() - 1,
            ),
        };
        let Some(assignment) = assignment else {
            return fail(
                DsStatus::InvalidArgument,
                format!("no outcome for dragon action {dragon}"),
            );
        };
        if len < players {
            return fail(
                DsStatus::InvalidArgument,
                format!("buffer holds {len} players, need {players}"),
            );
        }
        let out = std::slice::from_raw_parts_mut(boxes, players);
        out.fill(0);
        for (&player, &b) in &assignment.map {
            out[player - 1] = b;
        }
        DsStatus::Ok
    })
}

/// The result as pretty-printed JSON; release with [`ds_string_free`].
///
/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_result_to_json(result: *const DsResult, out: *mut *mut c_char) -> DsStatus {
    guard(|| {
        let Some(r) = result.as_ref() else {
            return fail(DsStatus::NullPointer, "result is null");
        };
        if out.is_null() {
            return fail(DsStatus::NullPointer, "out is null");
        }
        let json = match &r.0 {
            Solved::Scenario(s) => serde_json::to_string_pretty(s),
            Solved::Kkm(k) => serde_json::to_string_pretty(k),
        };
        match json {
            Ok(j) => give_string(j, out),
            Err(e) => fail(DsStatus::Internal, e.to_string()),
        }
    })
}

/// Checks the dragon marriage condition for `{"n": .., "sets": [[..], ..]}`. Returns
/// `Ok` with a tree of representatives, or `ConditionViolated` with a witness; the
/// JSON report is written to `out` in both cases.
///
/// # Safety
/// `family_json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_lemma(family_json: *const c_char, out: *mut *mut c_char) -> DsStatus {
    guard(|| {
        if out.is_null() {
            return fail(DsStatus::NullPointer, "out is null");
        }
        let text = match read_str(family_json, "family_json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let family: SetFamily = match serde_json::from_str(text) {
            Ok(f) => f,
            Err(e) => return fail(DsStatus::InvalidArgument, e.to_string()),
        };
        let report = run_lemma(&family);
        if report.json.is_empty() {
            return fail(DsStatus::InvalidArgument, report.message.unwrap_or_default());
        }
        let status = give_string(report.json, out);
        match (status, report.code) {
            (DsStatus::Ok, EXIT_OK) => DsStatus::Ok,
            (DsStatus::Ok, _) => fail(DsStatus::ConditionViolated, report.message.unwrap_or_default()),
            (s, _) => s,
        }
    })
}

/// Re-checks a result JSON (as written by [`ds_result_to_json`] or the CLI) against a
/// profile. `min_margin` may be null.
///
/// # Safety
/// `result_json` must be a nul-terminated string, `profile` a live handle and
/// `min_margin` null or valid.
#[no_mangle]
pub unsafe extern "C" fn ds_verify(
    result_json: *const c_char,
    profile: *const DsProfile,
    tol: f64,
    min_margin: *mut f64,
) -> DsStatus {
    guard(|| {
        let text = match read_str(result_json, "result_json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let Some(profile) = profile.as_ref() else {
            return fail(DsStatus::NullPointer, "profile is null");
        };
        let result: ScenarioResult = match serde_json::from_str(text) {
            Ok(r) => r,
            Err(e) => return fail(DsStatus::InvalidArgument, e.to_string()),
        };
        let report = run_verify(&result, &profile.0, tol);
        if !min_margin.is_null() {
            let parsed: Option<f64> = serde_json::from_str::<serde_json::Value>(&report.json)
                .ok()
                .and_then(|v| v["min_margin"].as_f64());
            *min_margin = parsed.unwrap_or(f64::NAN);
        }
        match report.code {
            EXIT_OK => DsStatus::Ok,
            EXIT_VERIFY => fail(DsStatus::EnvyFailed, report.message.unwrap_or_default()),
            _ => fail(DsStatus::InvalidArgument, report.message.unwrap_or_default()),
        }
    })
}
