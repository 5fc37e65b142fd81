//! C ABI over `pprank`.
//!
//! Every function returns a [`PprankStatus`]; results come back through out
//! pointers. On failure, [`pprank_last_error_message`] describes the most
//! recent error on the calling thread. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use pprank::fairness::{
    attention_weights, ndcg, sensitivity, unfairness, AttentionModel, RatingScale, RelevanceProfile,
};
use pprank::pipeline::PrivateRun;
use pprank::protocol::ProtocolConfig;
use pprank::ring::{FixedPointCodec, RingElement};
use pprank::solver::{brute_force, build_problem, solve, RerankProblem, ScalingMode};
use pprank::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PprankStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    Protocol = 4,
    Io = 5,
    Panic = 6,
}

/// A reranking problem for one user.
pub struct PprankProblem {
    inner: RerankProblem,
}

/// A private protocol run serving users one at a time.
pub struct PprankRun {
    inner: PrivateRun,
    n: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PprankRunSummary {
    pub unfairness: f64,
    pub mean_ndcg: f64,
    pub min_ndcg: f64,
    pub served: usize,
    pub aborts: usize,
    pub noise_draws: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PprankStatus {
    match e {
        Error::Range { .. } => PprankStatus::OutOfRange,
        Error::Protocol(_) | Error::Transport(_) => PprankStatus::Protocol,
        Error::Io { .. } | Error::Ingestion { .. } => PprankStatus::Io,
        _ => PprankStatus::InvalidArgument,
    }
}

struct Fail(PprankStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PprankStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PprankStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PprankStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PprankStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pprank_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Encodes `x` as a ring element with `fractional_bits` bits of precision.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pprank_encode(
    x: f64,
    fractional_bits: u32,
    out: *mut u64,
) -> PprankStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = FixedPointCodec::new(fractional_bits)?.encode(x)?.0;
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pprank_decode(
    raw: u64,
    fractional_bits: u32,
    out: *mut f64,
) -> PprankStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = FixedPointCodec::new(fractional_bits)?.decode(RingElement(raw));
        Ok(())
    })
}

/// Writes the `n` normalized geometric attention weights.
///
/// # Safety
/// `out` must be valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn pprank_attention_weights(n: usize, out: *mut f64) -> PprankStatus {
    guard(|| {
        let w = attention_weights(n)?;
        output(out, n, "out")?.copy_from_slice(&w);
        Ok(())
    })
}

/// Per-user sensitivity of the aggregates under the geometric model.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pprank_sensitivity(n: usize, out: *mut f64) -> PprankStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = sensitivity(&AttentionModel::geometric(n)?);
        Ok(())
    })
}

/// NDCG of `reranked` relative to `original`, both position-to-item maps.
///
/// # Safety
/// The three arrays must each hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pprank_ndcg(
    original: *const usize,
    reranked: *const usize,
    r_hat: *const f64,
    n: usize,
    out: *mut f64,
) -> PprankStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ndcg(
            input(original, n, "original")?,
            input(reranked, n, "reranked")?,
            input(r_hat, n, "r_hat")?,
        )?;
        Ok(())
    })
}

/// L1 distance between accumulated attention and relevance.
///
/// # Safety
/// Both arrays must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pprank_unfairness(
    attention: *const f64,
    relevance: *const f64,
    n: usize,
    out: *mut f64,
) -> PprankStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = unfairness(
            input(attention, n, "attention")?,
            input(relevance, n, "relevance")?,
        )?;
        Ok(())
    })
}

/// Builds the reranking problem for one user. `original` is the relevance
/// ranking (position to item). Free the result with `pprank_problem_free`.
///
/// # Safety
/// The four arrays must each hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pprank_problem_new(
    xi: *const f64,
    r_hat: *const f64,
    w_hat: *const f64,
    original: *const usize,
    n: usize,
    theta: f64,
    k: usize,
    out: *mut *mut PprankProblem,
) -> PprankStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let inner = build_problem(
            input(xi, n, "xi")?,
            input(r_hat, n, "r_hat")?,
            input(w_hat, n, "w_hat")?,
            theta,
            k,
            input(original, n, "original")?,
        )?;
        *out = Box::into_raw(Box::new(PprankProblem { inner }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from `pprank_problem_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pprank_problem_free(problem: *mut PprankProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pprank_problem_size(problem: *const PprankProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.inner.n())
}

unsafe fn solve_with(
    problem: *const PprankProblem,
    order_out: *mut usize,
    objective_out: *mut f64,
    exact: impl FnOnce(&RerankProblem) -> pprank::Result<pprank::solver::Reranking>,
) -> PprankStatus {
    guard(|| {
        let p = &problem.as_ref().ok_or_else(|| null("problem"))?.inner;
        let order = output(order_out, p.n(), "order_out")?;
        let r = exact(p)?;
        order.copy_from_slice(r.order());
        if let Some(obj) = objective_out.as_mut() {
            *obj = p.objective(r.order());
        }
        Ok(())
    })
}

/// Exact solve. Writes the position-to-item order (n entries) and, if
/// `objective_out` is not NULL, its objective value.
///
/// # Safety
/// `problem` must be a live handle and `order_out` valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn pprank_problem_solve(
    problem: *const PprankProblem,
    order_out: *mut usize,
    objective_out: *mut f64,
) -> PprankStatus {
    solve_with(problem, order_out, objective_out, solve)
}

/// Enumeration reference solver; refuses instances with more than 8 items.
///
/// # Safety
/// As for `pprank_problem_solve`.
#[no_mangle]
pub unsafe extern "C" fn pprank_problem_brute_force(
    problem: *const PprankProblem,
    order_out: *mut usize,
    objective_out: *mut f64,
) -> PprankStatus {
    solve_with(problem, order_out, objective_out, brute_force)
}

/// Starts a private run over `users` users with `n` items each, using the
/// default fixed-point precision and argmin-preserving cost scaling.
/// `noise` = 0 disables the Laplace noise (testing only).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pprank_run_new(
    n: usize,
    users: usize,
    epsilon: f64,
    theta: f64,
    noise: bool,
    seed: u64,
    out: *mut *mut PprankRun,
) -> PprankStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let mut config = ProtocolConfig::new(n, users, epsilon);
        config.theta = theta;
        config.noise_enabled = noise;
        config.scaling = ScalingMode::ArgminPreserving;
        let inner = PrivateRun::new(&config, seed)?;
        *out = Box::into_raw(Box::new(PprankRun { inner, n }));
        Ok(())
    })
}

/// Serves the next user given raw scores on `[rating_min, rating_max]`.
/// Writes the chosen order (n entries) and, if non-NULL, its NDCG. A
/// failing user is recorded as aborted and the run can continue.
///
/// # Safety
/// `run` must be a live handle, `scores` must hold `n` elements and
/// `order_out` must be valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn pprank_run_serve_user(
    run: *mut PprankRun,
    scores: *const f64,
    n: usize,
    rating_min: f64,
    rating_max: f64,
    order_out: *mut usize,
    ndcg_out: *mut f64,
) -> PprankStatus {
    guard(|| {
        let run = run.as_mut().ok_or_else(|| null("run"))?;
        if n != run.n {
            return Err(Fail(
                PprankStatus::InvalidArgument,
                format!("run has n={}, got {n} scores", run.n),
            ));
        }
        let order = output(order_out, n, "order_out")?;
        let scale = RatingScale::new(rating_min, rating_max)?;
        let profile = RelevanceProfile::new(input(scores, n, "scores")?.to_vec(), scale)?;
        let rec = run.inner.serve_user(&profile)?;
        order.copy_from_slice(&rec.order);
        if let Some(x) = ndcg_out.as_mut() {
            *x = rec.ndcg;
        }
        Ok(())
    })
}

/// Ends the run, frees the handle and writes the evaluation summary. The
/// handle is released even when an error is returned.
///
/// # Safety
/// `run` must come from `pprank_run_new` and not be used afterwards;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pprank_run_finish(
    run: *mut PprankRun,
    out: *mut PprankRunSummary,
) -> PprankStatus {
    guard(|| {
        if run.is_null() {
            return Err(null("run"));
        }
        let run = Box::from_raw(run);
        let out = out_ref(out, "out")?;
        let outcome = run.inner.finish()?;
        *out = PprankRunSummary {
            unfairness: outcome.unfairness,
            mean_ndcg: outcome.mean_ndcg(),
            min_ndcg: outcome.min_ndcg(),
            served: outcome.ndcg.len(),
            aborts: outcome.aborts,
            noise_draws: outcome.noise_draws,
        };
        Ok(())
    })
}

/// Releases a run without summarizing it.
///
/// # Safety
/// `run` must come from `pprank_run_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pprank_run_free(run: *mut PprankRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
