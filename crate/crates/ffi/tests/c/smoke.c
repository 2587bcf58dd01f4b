#include <math.h>
#include <stdio.h>

#include "stokes_wire.h"

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            char msg[256];                                       \
            sw_last_error(msg, sizeof msg);                      \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond, msg); \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    SwMesh *base = NULL, *mesh = NULL;
    CHECK(sw_mesh_criss_cross(0.01, &base) == SW_STATUS_OK);
    CHECK(sw_mesh_refine(base, 1, &mesh) == SW_STATUS_OK);
    CHECK(sw_mesh_num_triangles(mesh) == 16);

    double theta[32];
    size_t n = 0;
    CHECK(sw_mesh_theta(mesh, theta, 32, &n) == SW_STATUS_OK);
    CHECK(n == 13 && fabs(theta[4] - 0.02) < 1e-3);
    CHECK(sw_mesh_theta(mesh, theta, 2, &n) == SW_STATUS_BUFFER_TOO_SMALL && n == 13);

    size_t critical[4];
    CHECK(sw_mesh_critical_set(mesh, 0.03, critical, 4, &n) == SW_STATUS_OK);
    CHECK(n == 1 && critical[0] == 4);

    SwSolution *sol = NULL;
    CHECK(sw_solve(mesh, 4, critical, 1, &sol) == SW_STATUS_OK);
    double eu, ep, div;
    CHECK(sw_solution_errors(sol, &eu, &ep, &div) == SW_STATUS_OK);
    CHECK(eu > 0.0 && ep > 0.0 && div < 0.02 * eu);
    sw_solution_free(sol);

    CHECK(sw_solve(mesh, 4, NULL, 1, &sol) == SW_STATUS_NULL_POINTER);
    CHECK(sw_last_error(NULL, 0) > 0);
    sw_mesh_free(mesh);
    sw_mesh_free(base);
    printf("ok %s\n", sw_version());
    return 0;
}
