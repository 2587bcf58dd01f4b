#ifndef STOKES_WIRE_H
#define STOKES_WIRE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of the C interface.
typedef enum SwStatus {
  SW_STATUS_OK = 0,
  SW_STATUS_NULL_POINTER = 1,
  SW_STATUS_INVALID_ARGUMENT = 2,
  SW_STATUS_MESH_ERROR = 3,
  SW_STATUS_ASSEMBLY_ERROR = 4,
  SW_STATUS_SOLVER_ERROR = 5,
  SW_STATUS_IO_ERROR = 6,
  SW_STATUS_BUFFER_TOO_SMALL = 7,
  SW_STATUS_PANIC = 8,
} SwStatus;

// Triangulation handle.
typedef struct SwMesh SwMesh;

// Solved manufactured-solution problem on a mesh.
typedef struct SwSolution SwSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Length of the last error message of this thread, copied NUL-terminated into `buf`
// when it fits in `cap` bytes.
//
// # Safety
// `buf` must be valid for `cap` writes or null.
size_t sw_last_error(char *buf, size_t cap);

// Library version as a static NUL-terminated string.
const char *sw_version(void);

// Unit-square criss-cross mesh with its centre moved to `(0.5 + eps, 0.5)`.
//
// # Safety
// `out` must be a valid pointer.
enum SwStatus sw_mesh_criss_cross(double eps, struct SwMesh **out);

// Reads a mesh in the text format of the command-line tool.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum SwStatus sw_mesh_read(const char *path, struct SwMesh **out);

// New mesh from `levels` red refinements of `mesh`.
//
// # Safety
// `mesh` must be a live handle and `out` a valid pointer.
enum SwStatus sw_mesh_refine(const struct SwMesh *mesh, size_t levels, struct SwMesh **out);

// Releases a mesh; null is ignored.
//
// # Safety
// `mesh` must come from this library and not be used afterwards.
void sw_mesh_free(struct SwMesh *mesh);

// Vertex count, or 0 for a null handle.
//
// # Safety
// `mesh` must be a live handle or null.
size_t sw_mesh_num_vertices(const struct SwMesh *mesh);

// Triangle count, or 0 for a null handle.
//
// # Safety
// `mesh` must be a live handle or null.
size_t sw_mesh_num_triangles(const struct SwMesh *mesh);

// Singular distance of every vertex; `len` receives the vertex count.
//
// # Safety
// `mesh` must be a live handle, `out` valid for `cap` writes, `len` valid or null.
enum SwStatus sw_mesh_theta(const struct SwMesh *mesh, double *out, size_t cap, size_t *len);

// Vertices with singular distance at most `eta`, in increasing order.
//
// # Safety
// `mesh` must be a live handle, `out` valid for `cap` writes, `len` valid or null.
enum SwStatus sw_mesh_critical_set(const struct SwMesh *mesh,
                                   double eta,
                                   size_t *out,
                                   size_t cap,
                                   size_t *len);

// Solves the benchmark problem with velocity degree `k`, constraining the
// alternating pressure sums at the `n` vertices in `critical`.
//
// # Safety
// `mesh` must be a live handle, `critical` valid for `n` reads, `out` a valid pointer.
enum SwStatus sw_solve(const struct SwMesh *mesh,
                       size_t k,
                       const size_t *critical,
                       size_t n,
                       struct SwSolution **out);

// Releases a solution; null is ignored.
//
// # Safety
// `sol` must come from this library and not be used afterwards.
void sw_solution_free(struct SwSolution *sol);

// Velocity and pressure dof counts.
//
// # Safety
// `sol` must be a live handle; the outputs valid pointers.
enum SwStatus sw_solution_ndof(const struct SwSolution *sol, size_t *ndof_u, size_t *ndof_p);

// `‖∇(u - u_h)‖`, `‖p - p_h‖` against the manufactured solution and `‖div u_h‖`.
//
// # Safety
// `sol` must be a live handle; the outputs valid pointers.
enum SwStatus sw_solution_errors(const struct SwSolution *sol,
                                 double *err_grad_u,
                                 double *err_p,
                                 double *div_norm);

// Velocity coefficients (interleaved x/y per free node); `len` receives the count.
//
// # Safety
// `sol` must be a live handle, `out` valid for `cap` writes, `len` valid or null.
enum SwStatus sw_solution_velocity(const struct SwSolution *sol,
                                   double *out,
                                   size_t cap,
                                   size_t *len);

// Pressure coefficients, element by element; `len` receives the count.
//
// # Safety
// `sol` must be a live handle, `out` valid for `cap` writes, `len` valid or null.
enum SwStatus sw_solution_pressure(const struct SwSolution *sol,
                                   double *out,
                                   size_t cap,
                                   size_t *len);

// Dense inf-sup estimate for degree `k` with the given constrained vertices.
//
// # Safety
// `mesh` must be a live handle, `critical` valid for `n` reads, `beta` a valid pointer.
enum SwStatus sw_infsup(const struct SwMesh *mesh,
                        size_t k,
                        const size_t *critical,
                        size_t n,
                        double *beta);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STOKES_WIRE_H */
