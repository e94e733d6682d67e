//! C ABI for `rotavg`.
//!
//! Graphs and rotation stacks are opaque handles owned by the caller and
//! released with the matching `*_free` function. Every function returns a
//! [`RavStatus`]; on failure, [`rav_last_error_message`] describes the error
//! for the calling thread. Rotations cross the boundary as nine `double`s in
//! row-major order.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::c_char;
use nalgebra::Matrix3;
use rotavg::certificate::{certify, default_tolerance};
use rotavg::graph::{objective, Measurement, RaGraph, RotationStack};
use rotavg::so3::{solve_losso, LinearCost, Rotation};
use rotavg::solvers::{solve, Algorithm, Init, SolverConfig, SweepOrder};
use rotavg::synth::{generate, SynthSpec};
use rotavg::{io, Error};

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RavStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Numerical = 5,
    Disconnected = 6,
    Degenerate = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RavAlgorithm {
    Bcd = 0,
    Sum = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RavInit {
    SpanningTree = 0,
    Identity = 1,
    Random = 2,
    /// Start from the stack passed to `rav_solve`.
    Explicit = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RavSweep {
    GaussSeidel = 0,
    Jacobi = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RavSolverOptions {
    pub epsilon: f64,
    pub max_iter: usize,
    pub init: RavInit,
    /// Seed for `RAV_INIT_RANDOM`.
    pub seed: u64,
    pub parallel: bool,
    pub sweep: RavSweep,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RavSolveResult {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub time_s: f64,
    /// SUM shift; NaN for BCD.
    pub mu: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RavCertificate {
    pub min_eig: f64,
    pub asymmetry: f64,
    pub tol: f64,
    pub optimal: bool,
}

/// Opaque measurement graph.
pub struct RavGraph {
    inner: RaGraph,
}

/// Opaque stack of rotations.
pub struct RavStack {
    inner: RotationStack,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(RavStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) => RavStatus::InvalidArgument,
            Error::DegenerateInput(_) | Error::DegenerateVertex(_) => RavStatus::Degenerate,
            Error::Disconnected(_) => RavStatus::Disconnected,
            Error::Numerical(_) => RavStatus::Numerical,
            Error::Parse { .. } => RavStatus::Parse,
            Error::Io(_) => RavStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RavStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(RavStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RavStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            RavStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            RavStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| invalid("path is not valid UTF-8"))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn rotation_arg(p: *const f64) -> Result<Rotation, Failure> {
    if p.is_null() {
        return Err(null("rotation"));
    }
    Ok(Rotation::from_row_slice(std::slice::from_raw_parts(p, 9))?)
}

unsafe fn write_rotation(out: *mut f64, r: &Rotation) {
    ptr::copy_nonoverlapping(r.to_row_array().as_ptr(), out, 9);
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn rav_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rav_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph from `m` edges: `i[k]`, `j[k]` and nine entries of
/// `rel[9k..9k+9]` per edge.
///
/// # Safety
/// `i` and `j` must point to `m` values, `rel` to `9m` values, `out` to a
/// writable handle slot. Null arrays are accepted when `m == 0`.
#[no_mangle]
pub unsafe extern "C" fn rav_graph_new(
    n: usize,
    m: usize,
    i: *const usize,
    j: *const usize,
    rel: *const f64,
    out: *mut *mut RavGraph,
) -> RavStatus {
    guard(|| {
        let mut edges = Vec::with_capacity(m);
        if m > 0 {
            if i.is_null() || j.is_null() || rel.is_null() {
                return Err(null("edge array"));
            }
            let (is, js) = (
                std::slice::from_raw_parts(i, m),
                std::slice::from_raw_parts(j, m),
            );
            for k in 0..m {
                edges.push(Measurement {
                    i: is[k],
                    j: js[k],
                    rel: rotation_arg(rel.add(9 * k))?,
                });
            }
        }
        write_out(
            out,
            RavGraph {
                inner: RaGraph::new(n, edges)?,
            },
        )
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn rav_graph_read(path: *const c_char, out: *mut *mut RavGraph) -> RavStatus {
    guard(|| {
        let g = io::read_graph(path_arg(path)?)?;
        write_out(out, RavGraph { inner: g })
    })
}

/// # Safety
/// `graph` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rav_graph_write(graph: *const RavGraph, path: *const c_char) -> RavStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        Ok(io::write_graph(path_arg(path)?, &g.inner)?)
    })
}

/// Synthetic instance; `phi` is the noise angle standard deviation and `p`
/// the edge-drop probability. `out_truth` may be null.
///
/// # Safety
/// `out_graph` must be a writable handle slot; `out_truth` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rav_graph_generate(
    n: usize,
    phi: f64,
    p: f64,
    seed: u64,
    out_graph: *mut *mut RavGraph,
    out_truth: *mut *mut RavStack,
) -> RavStatus {
    guard(|| {
        if out_graph.is_null() {
            return Err(null("output handle"));
        }
        let inst = generate(&SynthSpec::new(n, phi, p, seed))?;
        write_out(out_graph, RavGraph { inner: inst.graph })?;
        if !out_truth.is_null() {
            write_out(out_truth, RavStack { inner: inst.truth })?;
        }
        Ok(())
    })
}

/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rav_graph_free(graph: *mut RavGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Vertex count; 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rav_graph_vertex_count(graph: *const RavGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.vertex_count())
}

/// Edge count; 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rav_graph_edge_count(graph: *const RavGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.edge_count())
}

/// # Safety
/// `out` must be a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn rav_stack_identity(n: usize, out: *mut *mut RavStack) -> RavStatus {
    guard(|| {
        write_out(
            out,
            RavStack {
                inner: RotationStack::identity(n),
            },
        )
    })
}

/// Builds a stack from `9n` row-major entries; each block must be a rotation.
///
/// # Safety
/// `data` must point to `9n` values and `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn rav_stack_new(
    n: usize,
    data: *const f64,
    out: *mut *mut RavStack,
) -> RavStatus {
    guard(|| {
        if n > 0 && data.is_null() {
            return Err(null("data"));
        }
        let rotations = (0..n)
            .map(|k| rotation_arg(data.add(9 * k)))
            .collect::<Result<Vec<_>, _>>()?;
        write_out(
            out,
            RavStack {
                inner: RotationStack::new(rotations),
            },
        )
    })
}

/// # Safety
/// `stack` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rav_stack_free(stack: *mut RavStack) {
    if !stack.is_null() {
        drop(Box::from_raw(stack));
    }
}

/// Number of rotations; 0 for a null handle.
///
/// # Safety
/// `stack` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rav_stack_len(stack: *const RavStack) -> usize {
    stack.as_ref().map_or(0, |s| s.inner.len())
}

/// Copies rotation `k` into `out[0..9]`.
///
/// # Safety
/// `stack` must be a live handle and `out` must have room for nine values.
#[no_mangle]
pub unsafe extern "C" fn rav_stack_get(
    stack: *const RavStack,
    k: usize,
    out: *mut f64,
) -> RavStatus {
    guard(|| {
        let s = deref(stack, "stack")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = s.inner.as_slice().get(k).ok_or_else(|| {
            invalid(format!(
                "index {k} out of range for {} rotations",
                s.inner.len()
            ))
        })?;
        write_rotation(out, r);
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn rav_stack_read(path: *const c_char, out: *mut *mut RavStack) -> RavStatus {
    guard(|| {
        let s = io::read_solution(path_arg(path)?)?;
        write_out(out, RavStack { inner: s })
    })
}

/// # Safety
/// `stack` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rav_stack_write(stack: *const RavStack, path: *const c_char) -> RavStatus {
    guard(|| {
        let s = deref(stack, "stack")?;
        Ok(io::write_solution(path_arg(path)?, &s.inner)?)
    })
}

#[no_mangle]
pub extern "C" fn rav_solver_options_default() -> RavSolverOptions {
    let d = SolverConfig::default();
    RavSolverOptions {
        epsilon: d.epsilon,
        max_iter: d.max_iter,
        init: RavInit::SpanningTree,
        seed: 0,
        parallel: d.parallel,
        sweep: RavSweep::GaussSeidel,
    }
}

/// Runs BCD or SUM. `options` may be null for defaults; `init_stack` is
/// read only with `RAV_INIT_EXPLICIT`; `out_result` may be null.
///
/// # Safety
/// Handles must be live; `out_stack` must be a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn rav_solve(
    graph: *const RavGraph,
    algorithm: RavAlgorithm,
    options: *const RavSolverOptions,
    init_stack: *const RavStack,
    out_stack: *mut *mut RavStack,
    out_result: *mut RavSolveResult,
) -> RavStatus {
    guard(|| {
        let g = &deref(graph, "graph")?.inner;
        if out_stack.is_null() {
            return Err(null("output handle"));
        }
        let o = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| rav_solver_options_default());
        let init = match o.init {
            RavInit::SpanningTree => Init::SpanningTree,
            RavInit::Identity => Init::Identity,
            RavInit::Random => Init::Random { seed: o.seed },
            RavInit::Explicit => Init::Explicit(deref(init_stack, "init_stack")?.inner.clone()),
        };
        let cfg = SolverConfig {
            epsilon: o.epsilon,
            max_iter: o.max_iter,
            init,
            parallel: o.parallel,
            sweep: match o.sweep {
                RavSweep::GaussSeidel => SweepOrder::GaussSeidel,
                RavSweep::Jacobi => SweepOrder::Jacobi,
            },
            check_feasibility: false,
        };
        let alg = match algorithm {
            RavAlgorithm::Bcd => Algorithm::Bcd,
            RavAlgorithm::Sum => Algorithm::Sum,
        };
        let sol = solve(g, alg, &cfg)?;
        if let Some(res) = out_result.as_mut() {
            *res = RavSolveResult {
                objective: sol.trace.final_objective(),
                iterations: sol.trace.iterations,
                converged: sol.trace.converged,
                time_s: sol.trace.time_s(),
                mu: sol.mu.unwrap_or(f64::NAN),
            };
        }
        write_out(
            out_stack,
            RavStack {
                inner: sol.rotations,
            },
        )
    })
}

/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rav_objective(
    graph: *const RavGraph,
    stack: *const RavStack,
    out: *mut f64,
) -> RavStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let s = deref(stack, "stack")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = objective(&g.inner, &s.inner)?;
        Ok(())
    })
}

/// Optimality certificate; `tol <= 0` selects the default `1e-6 · n`.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rav_certify(
    graph: *const RavGraph,
    stack: *const RavStack,
    tol: f64,
    out: *mut RavCertificate,
) -> RavStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let s = deref(stack, "stack")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let tol = if tol > 0.0 {
            tol
        } else {
            default_tolerance(g.inner.vertex_count())
        };
        let c = certify(&g.inner, &s.inner, tol)?;
        *out = RavCertificate {
            min_eig: c.min_eig,
            asymmetry: c.asymmetry,
            tol: c.tol,
            optimal: c.optimal,
        };
        Ok(())
    })
}

/// Minimizes `tr(A X)` over rotations `X`; `a` and `out_x` hold nine
/// row-major values. `out_value` may be null.
///
/// # Safety
/// `a` must point to nine values and `out_x` must have room for nine.
#[no_mangle]
pub unsafe extern "C" fn rav_solve_losso(
    a: *const f64,
    out_x: *mut f64,
    out_value: *mut f64,
) -> RavStatus {
    guard(|| {
        if a.is_null() || out_x.is_null() {
            return Err(null("matrix"));
        }
        let m = Matrix3::from_row_slice(std::slice::from_raw_parts(a, 9));
        let (x, value) = solve_losso(&LinearCost::new(m)?)?;
        write_rotation(out_x, &x);
        if let Some(v) = out_value.as_mut() {
            *v = value;
        }
        Ok(())
    })
}
