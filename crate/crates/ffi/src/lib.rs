//! C ABI over `attractor-core`.
//!
//! Every fallible function returns an [`AttrStatus`]; on failure the message
//! of the last error on the calling thread is available through
//! [`attr_last_error_message`]. Systems and LMP results are opaque handles
//! released with their `_free` functions.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use attractor_core::diagram::{sweep_diagram, DiagramSettings};
use attractor_core::lmp::{analyze, LmpAnalysis, LmpSettings, Outcome};
use attractor_core::lyapunov::{lyapunov_spectrum, LyapunovSettings};
use attractor_core::render::Window;
use attractor_core::saddlechart::{char_roots, classify_fixed_point, Region, Structure};
use attractor_core::systems::{
    extended_lorenz_eigen, ExtendedLorenz, FlowModel, GhmParams, Lorenz, PolyNonlinearity, State, SystemSpec,
};
use attractor_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttrStatus {
    Ok = 0,
    /// Invalid argument or configuration.
    InvalidArgument = 1,
    /// The orbit escaped.
    Escape = 2,
    /// Numerical hard failure (singular matrix, no convergence, ...).
    Numerical = 3,
    Io = 4,
    NullPointer = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttrOutcome {
    Pseudohyperbolic = 0,
    Quasiattractor = 1,
    Inconclusive = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttrStructure {
    StableNode = 0,
    StableFocus = 1,
    SaddleOneUnstable = 2,
    SaddleFocusOneUnstable = 3,
    SaddleTwoUnstable = 4,
    SaddleFocusTwoUnstable = 5,
    Unstable = 6,
    OnBifurcation = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttrRegion {
    StabilityTriangle = 0,
    D1 = 1,
    D2 = 2,
    D3 = 3,
    D4 = 4,
    Other = 5,
}

/// Eigen-structure of the fixed point `O` of the generalized Hénon map.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct AttrFixedPoint {
    pub eigen_re: [f64; 3],
    pub eigen_im: [f64; 3],
    pub structure: AttrStructure,
    pub region: AttrRegion,
    /// NaN when the saddle value is undefined.
    pub sigma: f64,
}

/// A map or flow.
pub struct AttrSystem(SystemSpec);

/// Result of a full LMP analysis.
pub struct AttrLmp(LmpAnalysis);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AttrStatus {
    match e.exit_code() {
        1 => AttrStatus::InvalidArgument,
        2 => AttrStatus::Escape,
        4 => AttrStatus::Io,
        _ => AttrStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), AttrFail>) -> AttrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AttrStatus::Ok,
        Ok(Err(AttrFail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside attractor-core".into());
            AttrStatus::Panic
        }
    }
}

struct AttrFail(AttrStatus, String);

impl From<Error> for AttrFail {
    fn from(e: Error) -> Self {
        AttrFail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> AttrFail {
    AttrFail(AttrStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: &str) -> AttrFail {
    AttrFail(AttrStatus::InvalidArgument, msg.to_string())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, 0 if there is none.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn attr_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Roots of `λ³ − Aλ² − Cλ − B`, sorted by descending modulus.
///
/// # Safety
/// `re` and `im` must each point to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn attr_char_roots(a: f64, b: f64, c: f64, re: *mut f64, im: *mut f64) -> AttrStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null("output array"));
        }
        for (k, z) in char_roots(a, b, c).iter().enumerate() {
            *re.add(k) = z.re;
            *im.add(k) = z.im;
        }
        Ok(())
    })
}

/// Eigenvalues of the extended Lorenz system at the origin.
///
/// # Safety
/// `re` and `im` must each point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn attr_extended_lorenz_eigen(
    sigma: f64,
    r: f64,
    b: f64,
    mu: f64,
    re: *mut f64,
    im: *mut f64,
) -> AttrStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null("output array"));
        }
        for (k, z) in extended_lorenz_eigen(sigma, r, b, mu).iter().enumerate() {
            *re.add(k) = z.re;
            *im.add(k) = z.im;
        }
        Ok(())
    })
}

/// Classifies `O` for parameters `(A, B, C)`; `tol` is the half-width of
/// the bifurcation band around `|λ| = 1`.
///
/// # Safety
/// `out` must point to a writable [`AttrFixedPoint`].
#[no_mangle]
pub unsafe extern "C" fn attr_classify_fixed_point(
    a: f64,
    b: f64,
    c: f64,
    tol: f64,
    out: *mut AttrFixedPoint,
) -> AttrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cls = classify_fixed_point(a, b, c, tol);
        let structure = match cls.structure {
            Structure::StableNode => AttrStructure::StableNode,
            Structure::StableFocus => AttrStructure::StableFocus,
            Structure::Saddle1U => AttrStructure::SaddleOneUnstable,
            Structure::SaddleFocus1U => AttrStructure::SaddleFocusOneUnstable,
            Structure::Saddle2U => AttrStructure::SaddleTwoUnstable,
            Structure::SaddleFocus2U => AttrStructure::SaddleFocusTwoUnstable,
            Structure::Unstable => AttrStructure::Unstable,
            Structure::OnBifurcation => AttrStructure::OnBifurcation,
        };
        let region = match cls.region {
            Region::IV => AttrRegion::StabilityTriangle,
            Region::D1 => AttrRegion::D1,
            Region::D2 => AttrRegion::D2,
            Region::D3 => AttrRegion::D3,
            Region::D4 => AttrRegion::D4,
            Region::Other => AttrRegion::Other,
        };
        *out = AttrFixedPoint {
            eigen_re: cls.eigenvalues.map(|z| z.re),
            eigen_im: cls.eigenvalues.map(|z| z.im),
            structure,
            region,
            sigma: cls.sigma.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

unsafe fn put_system(out: *mut *mut AttrSystem, spec: SystemSpec) -> Result<(), AttrFail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(AttrSystem(spec)));
    Ok(())
}

/// Generalized Hénon map `x̄ = y, ȳ = z, z̄ = Bx + Az + Cy + f(y, z)`.
///
/// `coeffs` holds the seven coefficients of `f` in the order
/// `y², yz, z², y³, y²z, yz², z³`; null selects `f = −z²`.
///
/// # Safety
/// `coeffs` must be null or point to 7 doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn attr_system_ghm(
    a: f64,
    b: f64,
    c: f64,
    coeffs: *const f64,
    out: *mut *mut AttrSystem,
) -> AttrStatus {
    guard(|| {
        if b == 0.0 {
            return Err(Error::NonInvertible.into());
        }
        let nl = if coeffs.is_null() {
            PolyNonlinearity::minus_z_squared()
        } else {
            let k = std::slice::from_raw_parts(coeffs, 7);
            PolyNonlinearity {
                yy: k[0],
                yz: k[1],
                zz: k[2],
                yyy: k[3],
                yyz: k[4],
                yzz: k[5],
                zzz: k[6],
            }
        };
        put_system(out, SystemSpec::Ghm(GhmParams::new(a, b, c, nl)))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn attr_system_lorenz(sigma: f64, r: f64, b: f64, out: *mut *mut AttrSystem) -> AttrStatus {
    guard(|| put_system(out, SystemSpec::Flow(FlowModel::Lorenz(Lorenz { sigma, r, b }))))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn attr_system_extended_lorenz(
    sigma: f64,
    r: f64,
    b: f64,
    mu: f64,
    out: *mut *mut AttrSystem,
) -> AttrStatus {
    guard(|| {
        put_system(
            out,
            SystemSpec::Flow(FlowModel::ExtendedLorenz(ExtendedLorenz { sigma, r, b, mu })),
        )
    })
}

/// Phase-space dimension of `system` (0 for null).
///
/// # Safety
/// `system` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn attr_system_dimension(system: *const AttrSystem) -> usize {
    system.as_ref().map_or(0, |s| s.0.dimension())
}

/// # Safety
/// `system` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn attr_system_free(system: *mut AttrSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

unsafe fn inputs(
    system: *const AttrSystem,
    x0: *const f64,
    dim: usize,
    transient: usize,
    measure: usize,
) -> Result<(SystemSpec, State, LyapunovSettings), AttrFail> {
    let spec = system.as_ref().ok_or_else(|| null("system"))?.0;
    if x0.is_null() {
        return Err(null("x0"));
    }
    if dim != spec.dimension() {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension(),
            got: dim,
        }
        .into());
    }
    let mut settings = LyapunovSettings::defaults_for(&spec);
    if transient > 0 {
        settings.transient = transient;
    }
    if measure > 0 {
        settings.measure = measure;
    }
    Ok((spec, State::from_column_slice(std::slice::from_raw_parts(x0, dim)), settings))
}

/// Lyapunov spectrum from `x0` (length `dim`), written descending into
/// `exponents` (length `dim`). Zero `transient` or `measure` selects the
/// default budget.
///
/// # Safety
/// `system` must be a live handle; `x0` and `exponents` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn attr_lyapunov(
    system: *const AttrSystem,
    x0: *const f64,
    dim: usize,
    transient: usize,
    measure: usize,
    exponents: *mut f64,
) -> AttrStatus {
    guard(|| {
        let (spec, x, settings) = inputs(system, x0, dim, transient, measure)?;
        if exponents.is_null() {
            return Err(null("exponents"));
        }
        let (report, _) = lyapunov_spectrum(&spec, &x, &settings, false)?;
        ptr::copy_nonoverlapping(report.exponents.as_ptr(), exponents, dim);
        Ok(())
    })
}

/// Runs spectrum, backward field, LMP graphs and verdict with default
/// settings (`stride` 0 chooses automatically, `seed` selects the pairs).
///
/// # Safety
/// `system` must be a live handle; `x0` must hold `dim` doubles; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn attr_lmp_analyze(
    system: *const AttrSystem,
    x0: *const f64,
    dim: usize,
    transient: usize,
    measure: usize,
    stride: usize,
    seed: u64,
    out: *mut *mut AttrLmp,
) -> AttrStatus {
    guard(|| {
        let (spec, x, settings) = inputs(system, x0, dim, transient, measure)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if stride > 2 {
            return Err(invalid("stride must be 0 (automatic), 1 or 2"));
        }
        let lmp = LmpSettings {
            stride: (stride > 0).then_some(stride),
            seed,
            ..LmpSettings::default()
        };
        let analysis = analyze(&spec, &x, &settings, &lmp)?;
        *out = Box::into_raw(Box::new(AttrLmp(analysis)));
        Ok(())
    })
}

/// # Safety
/// `lmp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn attr_lmp_outcome(lmp: *const AttrLmp) -> AttrOutcome {
    match lmp.as_ref().map(|l| l.0.verdict().outcome) {
        Some(Outcome::Pseudohyperbolic) => AttrOutcome::Pseudohyperbolic,
        Some(Outcome::Quasiattractor) => AttrOutcome::Quasiattractor,
        _ => AttrOutcome::Inconclusive,
    }
}

/// Smallest `dx` in the forbidden band divided by the attractor diameter;
/// infinite when the band is empty, NaN for null.
///
/// # Safety
/// `lmp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn attr_lmp_relative_gap(lmp: *const AttrLmp) -> f64 {
    lmp.as_ref().map_or(f64::NAN, |l| {
        let v = l.0.verdict();
        v.gap / v.diameter
    })
}

/// Stride of the deciding graph (0 for null).
///
/// # Safety
/// `lmp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn attr_lmp_stride(lmp: *const AttrLmp) -> usize {
    lmp.as_ref().map_or(0, |l| l.0.verdict().stride)
}

/// Number of `(dx, dphi)` pairs of the deciding graph (0 for null).
///
/// # Safety
/// `lmp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn attr_lmp_pair_count(lmp: *const AttrLmp) -> usize {
    lmp.as_ref().map_or(0, |l| l.0.graph().len())
}

/// Copies up to `cap` pairs of the deciding graph; returns the number copied.
///
/// # Safety
/// `lmp` must be a live handle; `dx` and `dphi` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn attr_lmp_pairs(lmp: *const AttrLmp, dx: *mut f64, dphi: *mut f64, cap: usize) -> usize {
    let Some(l) = lmp.as_ref() else { return 0 };
    if dx.is_null() || dphi.is_null() {
        return 0;
    }
    let pairs = &l.0.graph().pairs;
    let n = pairs.len().min(cap);
    for (k, &(a, b)) in pairs[..n].iter().enumerate() {
        *dx.add(k) = a;
        *dphi.add(k) = b;
    }
    n
}

/// # Safety
/// `lmp` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn attr_lmp_free(lmp: *mut AttrLmp) {
    if !lmp.is_null() {
        drop(Box::from_raw(lmp));
    }
}

/// Lyapunov diagram of the map with `f = −z²` at fixed `B` over a
/// `width × height` grid spanning the window (corners included, row 0 at
/// `c_max`). Class codes 0–6 are written row-major into `classes`.
/// Zero `transient` or `measure` selects the default budget.
///
/// # Safety
/// `classes` must hold `width * height` bytes.
#[no_mangle]
pub unsafe extern "C" fn attr_diagram(
    a_min: f64,
    a_max: f64,
    c_min: f64,
    c_max: f64,
    width: usize,
    height: usize,
    b: f64,
    transient: usize,
    measure: usize,
    classes: *mut u8,
) -> AttrStatus {
    guard(|| {
        if classes.is_null() {
            return Err(null("classes"));
        }
        let mut settings = DiagramSettings::default();
        if transient > 0 {
            settings.transient = transient;
        }
        if measure > 0 {
            settings.measure = measure;
        }
        let window = Window::new(a_min, a_max, c_min, c_max);
        let raster = sweep_diagram(window, (width, height), b, &settings, true)?;
        for (k, p) in raster.pixels.iter().enumerate() {
            *classes.add(k) = p.class;
        }
        Ok(())
    })
}
