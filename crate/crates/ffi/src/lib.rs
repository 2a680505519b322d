//! C interface to `isovar`.
//!
//! Objects are opaque handles created by the constructor functions and
//! released with the matching `*_free`. Every fallible call returns an
//! [`IsovarStatus`]; on failure the message is available from
//! [`isovar_last_error`] until the next failing call on the same thread.
//! Strings returned through out-pointers are owned by the caller and must be
//! released with [`isovar_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use isovar::ambient::{AmbientRef, AmbientSurface, Domain};
use isovar::config::Config;
use isovar::flow::{run_dichotomy, FlowConfig, Outcome};
use isovar::inequality::{check_ball_bound, check_linear, check_nonlinear, IsoperimetricReport, Verdict};
use isovar::io::{read_mesh, write_mesh};
use isovar::mesh::MeshSurface;
use isovar::runner::{run_config, RunOptions};
use isovar::stability::StabilityProblem;
use isovar::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsovarStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Parse = 3,
    Validation = 4,
    InvalidInput = 5,
    Numeric = 6,
    Unsupported = 7,
    Flow = 8,
    Io = 9,
    Panic = 10,
}

/// Verdict of an inequality check.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsovarVerdict {
    Holds = 0,
    Violated = 1,
    Inconclusive = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IsovarCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub constant: f64,
    pub normalized: f64,
    /// `α` of the nonlinear check; NaN otherwise.
    pub alpha: f64,
    /// Gap of an inconclusive verdict; NaN otherwise.
    pub gap: f64,
    pub verdict: IsovarVerdict,
}

/// Dichotomy result. Fields that do not apply to the outcome are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IsovarDichotomy {
    /// 1 when the flow went extinct, 0 when it converged.
    pub extinct: i32,
    pub t_ext: f64,
    pub length: f64,
    pub residual: f64,
    pub eigenvalue: f64,
    pub curve_count: usize,
    pub steps: u64,
}

/// Riemannian ambient surface or Euclidean space.
pub struct IsovarAmbient(AmbientRef);

/// Polyline or triangle mesh.
pub struct IsovarMesh(MeshSurface);

/// Compact domain with boundary.
pub struct IsovarDomain(Domain);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> IsovarStatus {
    match e {
        Error::Parse(_) => IsovarStatus::Parse,
        Error::Validation(_) => IsovarStatus::Validation,
        Error::Numeric(_) | Error::CertificateInvalid { .. } | Error::InsufficientData(_) => IsovarStatus::Numeric,
        Error::Unsupported(_) | Error::UnsupportedDimension(_) | Error::MissingEmbedding => IsovarStatus::Unsupported,
        Error::Topology(_) | Error::RejectedInput(_) | Error::Inconclusive(_) | Error::OffsetTooLarge(_) => {
            IsovarStatus::Flow
        }
        Error::Io(_) => IsovarStatus::Io,
        _ => IsovarStatus::InvalidInput,
    }
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (IsovarStatus, String)>) -> IsovarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IsovarStatus::Ok,
        Ok(Err((s, m))) => {
            set_error(&m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            IsovarStatus::Panic
        }
    }
}

trait Ffi<T> {
    fn ffi(self) -> Result<T, (IsovarStatus, String)>;
}

impl<T> Ffi<T> for isovar::Result<T> {
    fn ffi(self) -> Result<T, (IsovarStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (IsovarStatus, String) {
    (IsovarStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (IsovarStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, (IsovarStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (IsovarStatus::InvalidString, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (IsovarStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), (IsovarStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), (IsovarStatus, String)> {
    let c = CString::new(s).map_err(|_| (IsovarStatus::InvalidString, "string contains NUL".into()))?;
    write(out, c.into_raw())
}

/// Message of the last failing call on this thread. Valid until the next
/// failing call; never null.
#[no_mangle]
pub extern "C" fn isovar_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn isovar_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ambients

/// Euclidean plane.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_ambient_plane(out: *mut *mut IsovarAmbient) -> IsovarStatus {
    guard(|| put(out, IsovarAmbient(Arc::new(AmbientSurface::plane()))))
}

/// Euclidean 3-space.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_ambient_space(out: *mut *mut IsovarAmbient) -> IsovarStatus {
    guard(|| put(out, IsovarAmbient(Arc::new(AmbientSurface::space()))))
}

/// Round sphere of the given radius, chart `(theta, phi)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_ambient_round_sphere(radius: f64, out: *mut *mut IsovarAmbient) -> IsovarStatus {
    guard(|| put(out, IsovarAmbient(Arc::new(AmbientSurface::round_sphere(radius).ffi()?))))
}

/// Surface of revolution with profile `r(z)` over `[z_lo, z_hi]`.
///
/// # Safety
/// `profile` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_ambient_revolution(
    profile: *const c_char,
    z_lo: f64,
    z_hi: f64,
    out: *mut *mut IsovarAmbient,
) -> IsovarStatus {
    guard(|| {
        let p = string(profile, "profile")?;
        put(out, IsovarAmbient(Arc::new(AmbientSurface::revolution(p, z_lo, z_hi).ffi()?)))
    })
}

/// # Safety
/// `a` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn isovar_ambient_free(a: *mut IsovarAmbient) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

// meshes

/// Plane circle with `n` segments.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_mesh_circle(cx: f64, cy: f64, radius: f64, n: usize, out: *mut *mut IsovarMesh) -> IsovarStatus {
    guard(|| put(out, IsovarMesh(MeshSurface::circle([cx, cy], radius, n).ffi()?)))
}

/// Coordinate circle `x⁰ = c` with `n` segments.
///
/// # Safety
/// `ambient` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_mesh_latitude(
    ambient: *const IsovarAmbient,
    c: f64,
    n: usize,
    out: *mut *mut IsovarMesh,
) -> IsovarStatus {
    guard(|| {
        let a = borrow(ambient, "ambient")?;
        put(out, IsovarMesh(MeshSurface::latitude(a.0.clone(), c, n).ffi()?))
    })
}

/// Unit disk in E³ at the given refinement level.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_mesh_unit_disk(level: usize, out: *mut *mut IsovarMesh) -> IsovarStatus {
    guard(|| put(out, IsovarMesh(MeshSurface::unit_disk(level).ffi()?)))
}

/// Unit icosphere at the given subdivision level.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_mesh_icosphere(level: usize, out: *mut *mut IsovarMesh) -> IsovarStatus {
    guard(|| put(out, IsovarMesh(MeshSurface::icosphere(level).ffi()?)))
}

/// Parse the mesh text format in `ambient`.
///
/// # Safety
/// `text` must be NUL-terminated; `ambient` a live handle; `out` valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_mesh_parse(
    text: *const c_char,
    ambient: *const IsovarAmbient,
    out: *mut *mut IsovarMesh,
) -> IsovarStatus {
    guard(|| {
        let t = string(text, "text")?;
        let a = borrow(ambient, "ambient")?;
        put(out, IsovarMesh(read_mesh(t, a.0.clone()).ffi()?))
    })
}

/// Serialise in the mesh text format. Free the result with
/// [`isovar_string_free`].
///
/// # Safety
/// `mesh` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_mesh_to_text(mesh: *const IsovarMesh, out: *mut *mut c_char) -> IsovarStatus {
    guard(|| {
        let m = borrow(mesh, "mesh")?;
        put_string(out, write_mesh(&m.0))
    })
}

/// Mesh statistics written to non-null out-pointers.
///
/// # Safety
/// `mesh` must be a live handle; each non-null pointer valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_mesh_measures(
    mesh: *const IsovarMesh,
    measure: *mut f64,
    boundary: *mut f64,
    curvature: *mut f64,
) -> IsovarStatus {
    guard(|| {
        let m = &borrow(mesh, "mesh")?.0;
        if !measure.is_null() {
            *measure = m.measure();
        }
        if !boundary.is_null() {
            *boundary = m.boundary_measure();
        }
        if !curvature.is_null() {
            *curvature = m.curvature_mass();
        }
        Ok(())
    })
}

/// # Safety
/// `mesh` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn isovar_mesh_dimension(mesh: *const IsovarMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.k())
}

/// # Safety
/// `m` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn isovar_mesh_free(m: *mut IsovarMesh) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

// inequality checks

fn check(r: IsoperimetricReport) -> IsovarCheck {
    let (verdict, gap) = match r.verdict {
        Verdict::Holds => (IsovarVerdict::Holds, f64::NAN),
        Verdict::Violated => (IsovarVerdict::Violated, f64::NAN),
        Verdict::Inconclusive { gap } => (IsovarVerdict::Inconclusive, gap),
    };
    IsovarCheck {
        lhs: r.lhs,
        rhs: r.rhs,
        ratio: r.ratio,
        constant: r.constant,
        normalized: r.normalized,
        alpha: r.alpha.unwrap_or(f64::NAN),
        gap,
        verdict,
    }
}

/// Smallest-enclosing-ball bound in a Euclidean ambient.
///
/// # Safety
/// `mesh` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_check_ball_bound(mesh: *const IsovarMesh, out: *mut IsovarCheck) -> IsovarStatus {
    guard(|| {
        let m = borrow(mesh, "mesh")?;
        write(out, check(check_ball_bound(&m.0).ffi()?))
    })
}

/// Linear inequality with constant `c`; `domain` may be null.
///
/// # Safety
/// `mesh` must be a live handle, `domain` live or null, `out` valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_check_linear(
    mesh: *const IsovarMesh,
    c: f64,
    domain: *const IsovarDomain,
    out: *mut IsovarCheck,
) -> IsovarStatus {
    guard(|| {
        let m = borrow(mesh, "mesh")?;
        let d = domain.as_ref().map(|d| &d.0);
        write(out, check(check_linear(&m.0, c, d).ffi()?))
    })
}

/// Nonlinear inequality with Euclidean constant `c` and curvature bound `k`.
/// Pass NaN for `linear_constant` when none is known.
///
/// # Safety
/// `mesh` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_check_nonlinear(
    mesh: *const IsovarMesh,
    c: f64,
    k: f64,
    linear_constant: f64,
    out: *mut IsovarCheck,
) -> IsovarStatus {
    guard(|| {
        let m = borrow(mesh, "mesh")?;
        let lc = (!linear_constant.is_nan()).then_some(linear_constant);
        write(out, check(check_nonlinear(&m.0, c, k, lc).ffi()?))
    })
}

/// Smallest eigenvalue of the Jacobi operator of a closed curve.
///
/// # Safety
/// `mesh` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_stability_eigenvalue(mesh: *const IsovarMesh, grid: usize, out: *mut f64) -> IsovarStatus {
    guard(|| {
        let m = &borrow(mesh, "mesh")?.0;
        let chains = m.chains();
        let pts = match chains.first() {
            Some((c, true)) => c.iter().map(|&v| m.vertices[v]).collect::<Vec<_>>(),
            _ => return Err((IsovarStatus::InvalidInput, "mesh is not a closed curve".into())),
        };
        let p = StabilityProblem::from_curve(&m.ambient, &pts, grid).ffi()?;
        write(out, p.smallest().eigenvalue)
    })
}

// domains and flow

/// Disk in the plane.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_domain_disk(cx: f64, cy: f64, radius: f64, out: *mut *mut IsovarDomain) -> IsovarStatus {
    guard(|| put(out, IsovarDomain(Domain::plane_disk([cx, cy], radius).ffi()?)))
}

/// Band `|z| ≤ h` on a surface of revolution.
///
/// # Safety
/// `ambient` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_domain_band(ambient: *const IsovarAmbient, h: f64, out: *mut *mut IsovarDomain) -> IsovarStatus {
    guard(|| {
        let a = borrow(ambient, "ambient")?;
        put(out, IsovarDomain(Domain::revolution_band(a.0.clone(), h).ffi()?))
    })
}

/// Cap `θ ≤ θ₀` on a round sphere.
///
/// # Safety
/// `ambient` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_domain_cap(ambient: *const IsovarAmbient, theta0: f64, out: *mut *mut IsovarDomain) -> IsovarStatus {
    guard(|| {
        let a = borrow(ambient, "ambient")?;
        put(out, IsovarDomain(Domain::spherical_cap(a.0.clone(), theta0).ffi()?))
    })
}

/// # Safety
/// `d` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn isovar_domain_free(d: *mut IsovarDomain) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Flow the domain boundary with default parameters until extinction or
/// convergence.
///
/// # Safety
/// `domain` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_dichotomy(domain: *const IsovarDomain, out: *mut IsovarDichotomy) -> IsovarStatus {
    guard(|| {
        let d = borrow(domain, "domain")?;
        let o = run_dichotomy(&d.0, &FlowConfig::default()).ffi()?;
        let mut r = IsovarDichotomy {
            extinct: 0,
            t_ext: f64::NAN,
            length: f64::NAN,
            residual: f64::NAN,
            eigenvalue: f64::NAN,
            curve_count: 0,
            steps: o.steps as u64,
        };
        match o.outcome {
            Outcome::Extinct { t_ext } => {
                r.extinct = 1;
                r.t_ext = t_ext;
            }
            Outcome::Converged { length, residual, stability_eigenvalue, curve_count, .. } => {
                r.length = length;
                r.residual = residual;
                r.eigenvalue = stability_eigenvalue;
                r.curve_count = curve_count;
            }
        }
        write(out, r)
    })
}

// configs

/// Run a TOML scenario config and write its report files into `out_dir`.
/// File inputs resolve against `base_dir` (may be null for the current
/// directory). `seed` overrides the config seed when non-null. The run's exit
/// code (0 all pass, 1 failed assertion, ≥ 2 error) goes to `exit_code`.
///
/// # Safety
/// Strings must be NUL-terminated; `seed` null or readable; `exit_code`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isovar_run_config(
    text: *const c_char,
    base_dir: *const c_char,
    out_dir: *const c_char,
    seed: *const u64,
    exit_code: *mut i32,
) -> IsovarStatus {
    guard(|| {
        let t = string(text, "text")?;
        let base = if base_dir.is_null() { "." } else { string(base_dir, "base_dir")? };
        let out = string(out_dir, "out_dir")?;
        let cfg = Config::parse(t).ffi()?;
        let opts = RunOptions { seed: seed.as_ref().copied(), ..Default::default() };
        let report = run_config(&cfg, t, Path::new(base), &opts);
        report.write(Path::new(out)).ffi()?;
        write(exit_code, report.exit_code())
    })
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn isovar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn null_out_pointer_is_reported() {
        let s = unsafe { isovar_ambient_plane(ptr::null_mut()) };
        assert_eq!(s, IsovarStatus::NullPointer);
        let msg = unsafe { CStr::from_ptr(isovar_last_error()) }.to_str().unwrap();
        assert!(msg.contains("null"));
    }

    #[test]
    fn circle_ball_bound_is_tight() {
        unsafe {
            let mut m = ptr::null_mut();
            assert_eq!(isovar_mesh_circle(0.0, 0.0, 1.0, 256, &mut m), IsovarStatus::Ok);
            let mut c = std::mem::zeroed::<IsovarCheck>();
            assert_eq!(isovar_check_ball_bound(m, &mut c), IsovarStatus::Ok);
            assert_eq!(c.verdict, IsovarVerdict::Holds);
            assert!((c.normalized - 1.0).abs() < 1e-3);
            isovar_mesh_free(m);
        }
    }
}
