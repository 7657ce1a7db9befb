//! C ABI over `contact_mech`: opaque handles, integer status codes, caller-owned buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use contact_mech::calculus::{integrate, Chart, Method, Trajectory, VectorField};
use contact_mech::cli::{run, scenario::Scenario};
use contact_mech::contact::{ContactStructure, HamiltonianSystem};
use contact_mech::herglotz::LagrangianSystem;
use contact_mech::{Error, Expr};

pub const CM_OK: i32 = 0;
pub const CM_ERR_NULL: i32 = 1;
pub const CM_ERR_UTF8: i32 = 2;
pub const CM_ERR_PARSE: i32 = 3;
pub const CM_ERR_DIMENSION: i32 = 4;
pub const CM_ERR_NUMERIC: i32 = 5;
pub const CM_ERR_CONFIG: i32 = 6;
pub const CM_ERR_IO: i32 = 7;
pub const CM_ERR_PANIC: i32 = 8;
pub const CM_ERR_ARGUMENT: i32 = 9;

pub const CM_METHOD_RK4: i32 = 0;
pub const CM_METHOD_EULER: i32 = 1;

/// Contact Hamiltonian system on the canonical chart (q, p, z).
pub struct CmHamiltonian(HamiltonianSystem<Expr>);

/// Lagrangian system on the tangent chart (q, v, z).
pub struct CmLagrangian(LagrangianSystem);

/// Sampled integral curve.
pub struct CmTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn code(e: &Error) -> i32 {
    match e {
        Error::Syntax { .. } | Error::UnknownVariable { .. } | Error::UnknownFunction { .. } | Error::Bindings(_) => {
            CM_ERR_PARSE
        }
        Error::Dimension { .. } => CM_ERR_DIMENSION,
        Error::Config { .. } | Error::UnknownSuite(_) => CM_ERR_CONFIG,
        Error::Io(_) => CM_ERR_IO,
        _ => CM_ERR_NUMERIC,
    }
}

fn guard(f: impl FnOnce() -> Result<(), i32>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CM_OK,
        Ok(Err(c)) => c,
        Err(_) => {
            set_error("panic".into());
            CM_ERR_PANIC
        }
    }
}

fn lib<T>(r: contact_mech::Result<T>) -> Result<T, i32> {
    r.map_err(|e| {
        set_error(e.to_string());
        code(&e)
    })
}

fn fail(c: i32, msg: &str) -> i32 {
    set_error(msg.into());
    c
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, i32> {
    if p.is_null() {
        return Err(fail(CM_ERR_NULL, "null string"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(CM_ERR_UTF8, "string is not UTF-8"))
}

unsafe fn input<'a>(p: *const f64, len: usize, expected: usize) -> Result<&'a [f64], i32> {
    if p.is_null() {
        return Err(fail(CM_ERR_NULL, "null input buffer"));
    }
    if len != expected {
        return Err(fail(CM_ERR_DIMENSION, &format!("expected {expected} values, got {len}")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output(p: *mut f64, len: usize, values: &[f64]) -> Result<(), i32> {
    if p.is_null() {
        return Err(fail(CM_ERR_NULL, "null output buffer"));
    }
    if len < values.len() {
        return Err(fail(CM_ERR_DIMENSION, &format!("output needs {} values, got {len}", values.len())));
    }
    std::slice::from_raw_parts_mut(p, values.len()).copy_from_slice(values);
    Ok(())
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), i32> {
    if out.is_null() {
        return Err(fail(CM_ERR_NULL, "null handle slot"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, i32> {
    p.as_ref().ok_or_else(|| fail(CM_ERR_NULL, "null handle"))
}

/// Copies the last error message of this thread, NUL-terminated and truncated to `len`.
/// Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cm_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            std::ptr::copy_nonoverlapping(e.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// # Safety
/// `h` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cm_hamiltonian_new(n: usize, h: *const c_char, out: *mut *mut CmHamiltonian) -> i32 {
    guard(|| {
        if n == 0 {
            return Err(fail(CM_ERR_ARGUMENT, "n must be positive"));
        }
        let e = lib(Chart::cotangent(n).parse(text(h)?))?;
        store(out, CmHamiltonian(HamiltonianSystem::new(ContactStructure::canonical(n), e)))
    })
}

/// # Safety
/// `h` must be null or come from `cm_hamiltonian_new`, and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cm_hamiltonian_free(h: *mut CmHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Chart dimension 2n+1, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_hamiltonian_dim(h: *const CmHamiltonian) -> usize {
    h.as_ref().map_or(0, |h| h.0.structure.dim())
}

/// Value of H at `x`.
///
/// # Safety
/// `x` must hold `len` doubles and `out` one.
#[no_mangle]
pub unsafe extern "C" fn cm_hamiltonian_value(h: *const CmHamiltonian, x: *const f64, len: usize, out: *mut f64) -> i32 {
    guard(|| {
        let h = handle(h)?;
        let x = input(x, len, h.0.structure.dim())?;
        let v = lib(h.0.h.eval_at(x))?;
        output(out, 1, &[v])
    })
}

/// Components of the contact Hamiltonian vector field at `x`.
///
/// # Safety
/// `x` must hold `len` doubles and `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cm_hamiltonian_vector_field(
    h: *const CmHamiltonian,
    x: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> i32 {
    guard(|| {
        let h = handle(h)?;
        let x = input(x, len, h.0.structure.dim())?;
        let v = lib(h.0.vector_field().value(x))?;
        output(out, out_len, &v)
    })
}

/// Jacobi bracket {f, g} of two expressions on the handle's chart.
///
/// # Safety
/// `f`, `g` must be NUL-terminated, `x` must hold `len` doubles and `out` one.
#[no_mangle]
pub unsafe extern "C" fn cm_hamiltonian_bracket(
    h: *const CmHamiltonian,
    f: *const c_char,
    g: *const c_char,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let h = handle(h)?;
        let s = h.0.structure;
        let chart = s.chart();
        let f = lib(chart.parse(text(f)?))?;
        let g = lib(chart.parse(text(g)?))?;
        let x = input(x, len, s.dim())?;
        let v = lib(s.jacobi().bracket(&f, &g, x))?;
        output(out, 1, &[v])
    })
}

fn method(m: i32) -> Result<Method, i32> {
    match m {
        CM_METHOD_RK4 => Ok(Method::Rk4),
        CM_METHOD_EULER => Ok(Method::Euler),
        _ => Err(fail(CM_ERR_ARGUMENT, "unknown method")),
    }
}

/// Integrates the Hamiltonian field from `x0` over [0, t_end].
///
/// # Safety
/// `x0` must hold `len` doubles and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cm_hamiltonian_integrate(
    h: *const CmHamiltonian,
    x0: *const f64,
    len: usize,
    dt: f64,
    t_end: f64,
    method_id: i32,
    out: *mut *mut CmTrajectory,
) -> i32 {
    guard(|| {
        let h = handle(h)?;
        let x0 = input(x0, len, h.0.structure.dim())?;
        let m = method(method_id)?;
        let tr = lib(integrate(&h.0.vector_field(), x0, dt, t_end, m))?;
        store(out, CmTrajectory(tr))
    })
}

/// # Safety
/// `l` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cm_lagrangian_new(n: usize, l: *const c_char, out: *mut *mut CmLagrangian) -> i32 {
    guard(|| {
        if n == 0 {
            return Err(fail(CM_ERR_ARGUMENT, "n must be positive"));
        }
        let sys = lib(LagrangianSystem::parse(text(l)?, n))?;
        store(out, CmLagrangian(sys))
    })
}

/// # Safety
/// `l` must be null or come from `cm_lagrangian_new`, and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cm_lagrangian_free(l: *mut CmLagrangian) {
    if !l.is_null() {
        drop(Box::from_raw(l));
    }
}

/// Energy E_L at `x`.
///
/// # Safety
/// `x` must hold `len` doubles and `out` one.
#[no_mangle]
pub unsafe extern "C" fn cm_lagrangian_energy(l: *const CmLagrangian, x: *const f64, len: usize, out: *mut f64) -> i32 {
    guard(|| {
        let l = handle(l)?;
        let x = input(x, len, l.0.dim())?;
        let v = lib(l.0.energy(x))?;
        output(out, 1, &[v])
    })
}

/// Herglotz vector field at `x`.
///
/// # Safety
/// `x` must hold `len` doubles and `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cm_lagrangian_herglotz(
    l: *const CmLagrangian,
    x: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> i32 {
    guard(|| {
        let l = handle(l)?;
        let x = input(x, len, l.0.dim())?;
        let v = lib(l.0.herglotz(x))?;
        output(out, out_len, &v)
    })
}

/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_trajectory_len(t: *const CmTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.0.rows.len())
}

/// Time and state of sample `i`.
///
/// # Safety
/// `time` must hold one double and `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cm_trajectory_row(
    t: *const CmTrajectory,
    i: usize,
    time: *mut f64,
    out: *mut f64,
    out_len: usize,
) -> i32 {
    guard(|| {
        let t = handle(t)?;
        if i >= t.0.rows.len() {
            return Err(fail(CM_ERR_ARGUMENT, "row index out of range"));
        }
        output(time, 1, &[t.0.times[i]])?;
        output(out, out_len, &t.0.rows[i])
    })
}

/// # Safety
/// `t` must be null or come from an integrate call, and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cm_trajectory_free(t: *mut CmTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Runs a scenario file, writing its CSV and report into `out_dir`.
/// `all_pass` receives 1 when every diagnostic passes, else 0.
///
/// # Safety
/// `path` and `out_dir` must be NUL-terminated and `all_pass` valid.
#[no_mangle]
pub unsafe extern "C" fn cm_run_scenario(path: *const c_char, out_dir: *const c_char, seed: u64, all_pass: *mut i32) -> i32 {
    guard(|| {
        let s = lib(Scenario::load(Path::new(text(path)?)))?;
        let dir = Path::new(text(out_dir)?);
        if all_pass.is_null() {
            return Err(fail(CM_ERR_NULL, "null verdict slot"));
        }
        let o = lib(run::run(&s, seed))?;
        let io = |name: &str, body: &str| {
            std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(dir.join(name), body))
                .map_err(|e| fail(CM_ERR_IO, &e.to_string()))
        };
        io(&s.output.csv, &o.csv)?;
        io(&s.output.report, &o.report.to_text())?;
        *all_pass = i32::from(o.report.all_pass());
        Ok(())
    })
}
