//! C interface to meshes, singular distances and Stokes solves.
//!
//! Objects are opaque handles returned through out-pointers and released with the
//! matching `*_free`. Every fallible call returns an [`SwStatus`]; the message of
//! the last failure on the calling thread is available from [`sw_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use stokes_wire::assembly::{AssemblyOptions, SaddleSystem};
use stokes_wire::bench::ManufacturedSolution;
use stokes_wire::singularity::{eta_critical_set, theta_values};
use stokes_wire::solve::{divergence_norm, error_norms, estimate_infsup, solve_stokes, DiscreteSolution};
use stokes_wire::Mesh;

/// Result codes of the C interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MeshError = 3,
    AssemblyError = 4,
    SolverError = 5,
    IoError = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Triangulation handle.
pub struct SwMesh {
    mesh: Mesh,
}

/// Solved manufactured-solution problem on a mesh.
pub struct SwSolution {
    mesh: Mesh,
    system: SaddleSystem,
    solution: DiscreteSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: SwStatus, msg: impl Into<String>) -> SwStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn guard(f: impl FnOnce() -> SwStatus) -> SwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(SwStatus::Panic, "internal panic"),
    }
}

/// Copies `values` into a caller buffer of capacity `cap`; `len` receives the needed size.
///
/// # Safety
/// `out` must be valid for `cap` writes or null when `cap` is 0.
unsafe fn copy_out<T: Copy>(values: &[T], out: *mut T, cap: usize, len: *mut usize) -> SwStatus {
    if !len.is_null() {
        *len = values.len();
    }
    if values.len() > cap {
        return fail(
            SwStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", values.len()),
        );
    }
    if !values.is_empty() {
        if out.is_null() {
            return fail(SwStatus::NullPointer, "output buffer is null");
        }
        std::ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    SwStatus::Ok
}

/// Length of the last error message of this thread, copied NUL-terminated into `buf`
/// when it fits in `cap` bytes.
///
/// # Safety
/// `buf` must be valid for `cap` writes or null.
#[no_mangle]
pub unsafe extern "C" fn sw_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && cap > e.len() {
            std::ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, e.len());
            *buf.add(e.len()) = 0;
        }
        e.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Unit-square criss-cross mesh with its centre moved to `(0.5 + eps, 0.5)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sw_mesh_criss_cross(eps: f64, out: *mut *mut SwMesh) -> SwStatus {
    guard(|| {
        if out.is_null() {
            return fail(SwStatus::NullPointer, "out is null");
        }
        match Mesh::criss_cross(eps) {
            Ok(mesh) => {
                *out = Box::into_raw(Box::new(SwMesh { mesh }));
                SwStatus::Ok
            }
            Err(e) => fail(SwStatus::MeshError, e.to_string()),
        }
    })
}

/// Reads a mesh in the text format of the command-line tool.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sw_mesh_read(path: *const c_char, out: *mut *mut SwMesh) -> SwStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(SwStatus::NullPointer, "path or out is null");
        }
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(SwStatus::InvalidArgument, "path is not UTF-8");
        };
        let file = match std::fs::File::open(path) {
            Ok(f) => f,
            Err(e) => return fail(SwStatus::IoError, format!("{path}: {e}")),
        };
        match Mesh::read_text(std::io::BufReader::new(file)) {
            Ok(mesh) => {
                *out = Box::into_raw(Box::new(SwMesh { mesh }));
                SwStatus::Ok
            }
            Err(e) => fail(SwStatus::MeshError, e.to_string()),
        }
    })
}

/// New mesh from `levels` red refinements of `mesh`.
///
/// # Safety
/// `mesh` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sw_mesh_refine(mesh: *const SwMesh, levels: usize, out: *mut *mut SwMesh) -> SwStatus {
    guard(|| {
        if mesh.is_null() || out.is_null() {
            return fail(SwStatus::NullPointer, "mesh or out is null");
        }
        match (*mesh).mesh.refined(levels) {
            Ok(mesh) => {
                *out = Box::into_raw(Box::new(SwMesh { mesh }));
                SwStatus::Ok
            }
            Err(e) => fail(SwStatus::MeshError, e.to_string()),
        }
    })
}

/// Releases a mesh; null is ignored.
///
/// # Safety
/// `mesh` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sw_mesh_free(mesh: *mut SwMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Vertex count, or 0 for a null handle.
///
/// # Safety
/// `mesh` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sw_mesh_num_vertices(mesh: *const SwMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.num_vertices())
}

/// Triangle count, or 0 for a null handle.
///
/// # Safety
/// `mesh` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sw_mesh_num_triangles(mesh: *const SwMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.num_triangles())
}

/// Singular distance of every vertex; `len` receives the vertex count.
///
/// # Safety
/// `mesh` must be a live handle, `out` valid for `cap` writes, `len` valid or null.
#[no_mangle]
pub unsafe extern "C" fn sw_mesh_theta(mesh: *const SwMesh, out: *mut f64, cap: usize, len: *mut usize) -> SwStatus {
    guard(|| match mesh.as_ref() {
        None => fail(SwStatus::NullPointer, "mesh is null"),
        Some(m) => copy_out(&theta_values(&m.mesh), out, cap, len),
    })
}

/// Vertices with singular distance at most `eta`, in increasing order.
///
/// # Safety
/// `mesh` must be a live handle, `out` valid for `cap` writes, `len` valid or null.
#[no_mangle]
pub unsafe extern "C" fn sw_mesh_critical_set(
    mesh: *const SwMesh,
    eta: f64,
    out: *mut usize,
    cap: usize,
    len: *mut usize,
) -> SwStatus {
    guard(|| match mesh.as_ref() {
        None => fail(SwStatus::NullPointer, "mesh is null"),
        Some(m) => match eta_critical_set(&m.mesh, eta) {
            Ok(set) => copy_out(&set, out, cap, len),
            Err(e) => fail(SwStatus::InvalidArgument, e.to_string()),
        },
    })
}

/// # Safety
/// `critical` must be valid for `n` reads or null when `n` is 0.
unsafe fn critical_slice<'a>(critical: *const usize, n: usize) -> Option<&'a [usize]> {
    match (critical.is_null(), n) {
        (_, 0) => Some(&[]),
        (true, _) => None,
        (false, _) => Some(std::slice::from_raw_parts(critical, n)),
    }
}

fn assemble(mesh: &Mesh, k: usize, critical: &[usize]) -> Result<SaddleSystem, SwStatus> {
    if let Some(&z) = critical.iter().find(|&&z| z >= mesh.num_vertices()) {
        return Err(fail(SwStatus::InvalidArgument, format!("vertex {z} out of range")));
    }
    let exact = ManufacturedSolution::new();
    SaddleSystem::assemble(mesh, k, critical, &|x| exact.force(x), AssemblyOptions::default())
        .map_err(|e| fail(SwStatus::AssemblyError, e.to_string()))
}

/// Solves the benchmark problem with velocity degree `k`, constraining the
/// alternating pressure sums at the `n` vertices in `critical`.
///
/// # Safety
/// `mesh` must be a live handle, `critical` valid for `n` reads, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sw_solve(
    mesh: *const SwMesh,
    k: usize,
    critical: *const usize,
    n: usize,
    out: *mut *mut SwSolution,
) -> SwStatus {
    guard(|| {
        let (Some(m), Some(critical)) = (mesh.as_ref(), critical_slice(critical, n)) else {
            return fail(SwStatus::NullPointer, "mesh or critical is null");
        };
        if out.is_null() {
            return fail(SwStatus::NullPointer, "out is null");
        }
        let system = match assemble(&m.mesh, k, critical) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match solve_stokes(&system) {
            Ok(solution) => {
                *out = Box::into_raw(Box::new(SwSolution {
                    mesh: m.mesh.clone(),
                    system,
                    solution,
                }));
                SwStatus::Ok
            }
            Err(e) => fail(SwStatus::SolverError, e.to_string()),
        }
    })
}

/// Releases a solution; null is ignored.
///
/// # Safety
/// `sol` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sw_solution_free(sol: *mut SwSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Velocity and pressure dof counts.
///
/// # Safety
/// `sol` must be a live handle; the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sw_solution_ndof(sol: *const SwSolution, ndof_u: *mut usize, ndof_p: *mut usize) -> SwStatus {
    guard(|| {
        let Some(s) = sol.as_ref() else {
            return fail(SwStatus::NullPointer, "solution is null");
        };
        if ndof_u.is_null() || ndof_p.is_null() {
            return fail(SwStatus::NullPointer, "output is null");
        }
        *ndof_u = s.solution.u.len();
        *ndof_p = s.solution.p.len();
        SwStatus::Ok
    })
}

/// `‖∇(u - u_h)‖`, `‖p - p_h‖` against the manufactured solution and `‖div u_h‖`.
///
/// # Safety
/// `sol` must be a live handle; the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sw_solution_errors(
    sol: *const SwSolution,
    err_grad_u: *mut f64,
    err_p: *mut f64,
    div_norm: *mut f64,
) -> SwStatus {
    guard(|| {
        let Some(s) = sol.as_ref() else {
            return fail(SwStatus::NullPointer, "solution is null");
        };
        if err_grad_u.is_null() || err_p.is_null() || div_norm.is_null() {
            return fail(SwStatus::NullPointer, "output is null");
        }
        let exact = ManufacturedSolution::new();
        let (u, p) = (&s.solution.u, &s.solution.p);
        let errors = error_norms(
            &s.mesh,
            &s.system,
            u,
            p,
            |x| exact.velocity_gradient(x),
            |x| exact.pressure(x),
        );
        let div = divergence_norm(&s.mesh, &s.system, u);
        match (errors, div) {
            (Ok((eu, ep)), Ok(d)) => {
                *err_grad_u = eu;
                *err_p = ep;
                *div_norm = d;
                SwStatus::Ok
            }
            (Err(e), _) | (_, Err(e)) => fail(SwStatus::AssemblyError, e.to_string()),
        }
    })
}

/// Velocity coefficients (interleaved x/y per free node); `len` receives the count.
///
/// # Safety
/// `sol` must be a live handle, `out` valid for `cap` writes, `len` valid or null.
#[no_mangle]
pub unsafe extern "C" fn sw_solution_velocity(
    sol: *const SwSolution,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> SwStatus {
    guard(|| match sol.as_ref() {
        None => fail(SwStatus::NullPointer, "solution is null"),
        Some(s) => copy_out(&s.solution.u, out, cap, len),
    })
}

/// Pressure coefficients, element by element; `len` receives the count.
///
/// # Safety
/// `sol` must be a live handle, `out` valid for `cap` writes, `len` valid or null.
#[no_mangle]
pub unsafe extern "C" fn sw_solution_pressure(
    sol: *const SwSolution,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> SwStatus {
    guard(|| match sol.as_ref() {
        None => fail(SwStatus::NullPointer, "solution is null"),
        Some(s) => copy_out(&s.solution.p, out, cap, len),
    })
}

/// Dense inf-sup estimate for degree `k` with the given constrained vertices.
///
/// # Safety
/// `mesh` must be a live handle, `critical` valid for `n` reads, `beta` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sw_infsup(
    mesh: *const SwMesh,
    k: usize,
    critical: *const usize,
    n: usize,
    beta: *mut f64,
) -> SwStatus {
    guard(|| {
        let (Some(m), Some(critical)) = (mesh.as_ref(), critical_slice(critical, n)) else {
            return fail(SwStatus::NullPointer, "mesh or critical is null");
        };
        if beta.is_null() {
            return fail(SwStatus::NullPointer, "beta is null");
        }
        let system = match assemble(&m.mesh, k, critical) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match estimate_infsup(&system, &system.constraints) {
            Ok(est) => {
                *beta = est.beta;
                SwStatus::Ok
            }
            Err(e) => fail(SwStatus::SolverError, e.to_string()),
        }
    })
}
