#include "tg/batch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>

#include "tg/errors.hpp"
#include "tg/parallel.hpp"

namespace tg {

namespace {

bool is_affine(ElementKind kind) { return kind != ElementKind::QUAD4; }

void invert_transpose(const double* J, double det, int d, double* out) {
    if (d == 2) {
        // (J^-1)^T
        out[0] = J[3] / det;
        out[1] = -J[2] / det;
        out[2] = -J[1] / det;
        out[3] = J[0] / det;
    } else {
        const double c00 = J[4] * J[8] - J[5] * J[7];
        const double c01 = J[5] * J[6] - J[3] * J[8];
        const double c02 = J[3] * J[7] - J[4] * J[6];
        const double c10 = J[2] * J[7] - J[1] * J[8];
        const double c11 = J[0] * J[8] - J[2] * J[6];
        const double c12 = J[1] * J[6] - J[0] * J[7];
        const double c20 = J[1] * J[5] - J[2] * J[4];
        const double c21 = J[2] * J[3] - J[0] * J[5];
        const double c22 = J[0] * J[4] - J[1] * J[3];
        // inverse = adj/det; transpose of inverse = cofactor matrix / det
        out[0] = c00 / det;
        out[1] = c01 / det;
        out[2] = c02 / det;
        out[3] = c10 / det;
        out[4] = c11 / det;
        out[5] = c12 / det;
        out[6] = c20 / det;
        out[7] = c21 / det;
        out[8] = c22 / det;
    }
}

void check_shape(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw InputError(std::string(what) + ": expected " + std::to_string(want) +
                         " values, got " + std::to_string(got));
}

}  // namespace

GeometryBatch batch_geometry(const Mesh& mesh, const ReferenceTables& tables) {
    if (tables.element.kind != mesh.kind)
        throw InputError("reference tables do not match mesh element kind");
    const std::int64_t E = mesh.element_count();
    const int Q = tables.rule.Q, k = tables.element.k, d = tables.element.d;

    GeometryBatch g;
    g.E = E;
    g.Q = Q;
    g.k_geom = k;
    g.d = d;
    g.coords.resize(static_cast<std::size_t>(E) * k * d);
    g.jac.resize(static_cast<std::size_t>(E) * Q * d * d);
    g.det.resize(static_cast<std::size_t>(E) * Q);
    g.jac_invT.resize(static_cast<std::size_t>(E) * Q * d * d);
    g.phys_qpoints.resize(static_cast<std::size_t>(E) * Q * d);

    const bool affine = is_affine(mesh.kind);
    std::atomic<std::int64_t> bad_element{-1};

    parallel_for(static_cast<std::size_t>(E), [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e) {
            const std::int64_t* conn = mesh.element(static_cast<std::int64_t>(e));
            double* X = &g.coords[e * k * d];
            for (int a = 0; a < k; ++a)
                for (int c = 0; c < d; ++c) X[a * d + c] = mesh.node(conn[a])[c];

            const int q_eval = affine ? 1 : Q;
            for (int q = 0; q < q_eval; ++q) {
                double* J = &g.jac[(e * Q + q) * d * d];
                for (int i = 0; i < d * d; ++i) J[i] = 0.0;
                const double* Ghat = &tables.G[static_cast<std::size_t>(q) * k * d];
                for (int a = 0; a < k; ++a)
                    for (int i = 0; i < d; ++i)
                        for (int j = 0; j < d; ++j) J[i * d + j] += X[a * d + i] * Ghat[a * d + j];
                double det;
                if (d == 2) {
                    det = J[0] * J[3] - J[1] * J[2];
                } else {
                    det = J[0] * (J[4] * J[8] - J[5] * J[7]) - J[1] * (J[3] * J[8] - J[5] * J[6]) +
                          J[2] * (J[3] * J[7] - J[4] * J[6]);
                }
                if (det <= 0.0) {
                    bad_element.store(static_cast<std::int64_t>(e));
                    return;
                }
                g.det[e * Q + q] = det;
                invert_transpose(J, det, d, &g.jac_invT[(e * Q + q) * d * d]);
            }
            if (affine) {
                for (int q = 1; q < Q; ++q) {
                    std::memcpy(&g.jac[(e * Q + q) * d * d], &g.jac[e * Q * d * d],
                                sizeof(double) * d * d);
                    std::memcpy(&g.jac_invT[(e * Q + q) * d * d], &g.jac_invT[e * Q * d * d],
                                sizeof(double) * d * d);
                    g.det[e * Q + q] = g.det[e * Q];
                }
            }
            for (int q = 0; q < Q; ++q) {
                double* xq = &g.phys_qpoints[(e * Q + q) * d];
                for (int c = 0; c < d; ++c) xq[c] = 0.0;
                const double* B = &tables.B[static_cast<std::size_t>(q) * k];
                for (int a = 0; a < k; ++a)
                    for (int c = 0; c < d; ++c) xq[c] += B[a] * X[a * d + c];
            }
        }
    });

    if (bad_element.load() >= 0)
        throw InputError("element " + std::to_string(bad_element.load()) +
                         " has non-positive Jacobian determinant");
    return g;
}

PhysicalGradients push_forward(const GeometryBatch& geom, const ReferenceTables& tables) {
    const std::int64_t E = geom.E;
    const int Q = geom.Q, k = geom.k_geom, d = geom.d;
    PhysicalGradients pg;
    pg.E = E;
    pg.Q = Q;
    pg.k = k;
    pg.d = d;
    pg.G.resize(static_cast<std::size_t>(E) * Q * k * d);
    parallel_for(static_cast<std::size_t>(E), [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e)
            for (int q = 0; q < Q; ++q) {
                const double* JiT = &geom.jac_invT[(e * Q + q) * d * d];
                const double* Ghat = &tables.G[static_cast<std::size_t>(q) * k * d];
                double* out = &pg.G[(e * Q + q) * k * d];
                for (int a = 0; a < k; ++a)
                    for (int i = 0; i < d; ++i) {
                        double s = 0.0;
                        for (int j = 0; j < d; ++j) s += JiT[i * d + j] * Ghat[a * d + j];
                        out[a * d + i] = s;
                    }
            }
    });
    return pg;
}

std::vector<double> local_stiffness_diffusion(const GeometryBatch& geom,
                                              const PhysicalGradients& grads,
                                              const std::vector<double>& coeff_eq,
                                              const ReferenceTables& tables) {
    const std::int64_t E = geom.E;
    const int Q = geom.Q, k = geom.k_geom, d = geom.d;
    check_shape(coeff_eq.size(), static_cast<std::size_t>(E) * Q, "diffusion coefficient");
    const auto& w = tables.rule.weights;
    std::vector<double> K(static_cast<std::size_t>(E) * k * k, 0.0);
    parallel_for(static_cast<std::size_t>(E), [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e) {
            double* Ke = &K[e * k * k];
            for (int q = 0; q < Q; ++q) {
                const double scale = w[q] * geom.det[e * Q + q] * coeff_eq[e * Q + q];
                const double* G = &grads.G[(e * Q + q) * k * d];
                for (int a = 0; a < k; ++a)
                    for (int b = 0; b < k; ++b) {
                        double dot = 0.0;
                        for (int c = 0; c < d; ++c) dot += G[a * d + c] * G[b * d + c];
                        Ke[a * k + b] += scale * dot;
                    }
            }
        }
    });
    return K;
}

std::vector<double> local_stiffness_elasticity(const GeometryBatch& geom,
                                               const PhysicalGradients& grads,
                                               const std::vector<double>& lambda_eq,
                                               const std::vector<double>& mu_eq,
                                               const ReferenceTables& tables) {
    const std::int64_t E = geom.E;
    const int Q = geom.Q, kg = geom.k_geom, d = geom.d;
    const int k = kg * d;
    const int ns = d == 2 ? 3 : 6;  // Voigt strain components
    check_shape(lambda_eq.size(), static_cast<std::size_t>(E) * Q, "lambda field");
    check_shape(mu_eq.size(), static_cast<std::size_t>(E) * Q, "mu field");
    for (double m : mu_eq)
        if (m <= 0.0) throw InputError("elasticity requires mu > 0");
    const auto& w = tables.rule.weights;
    std::vector<double> K(static_cast<std::size_t>(E) * k * k, 0.0);
    parallel_for(static_cast<std::size_t>(E), [&](std::size_t begin, std::size_t end) {
        std::vector<double> B(static_cast<std::size_t>(ns) * k);
        std::vector<double> DB(static_cast<std::size_t>(ns) * k);
        for (std::size_t e = begin; e < end; ++e) {
            double* Ke = &K[e * k * k];
            for (int q = 0; q < Q; ++q) {
                const double* G = &grads.G[(e * Q + q) * kg * d];
                std::fill(B.begin(), B.end(), 0.0);
                if (d == 2) {
                    for (int a = 0; a < kg; ++a) {
                        const double gx = G[a * 2 + 0], gy = G[a * 2 + 1];
                        B[0 * k + a * 2 + 0] = gx;
                        B[1 * k + a * 2 + 1] = gy;
                        B[2 * k + a * 2 + 0] = gy;
                        B[2 * k + a * 2 + 1] = gx;
                    }
                } else {
                    for (int a = 0; a < kg; ++a) {
                        const double gx = G[a * 3 + 0], gy = G[a * 3 + 1], gz = G[a * 3 + 2];
                        B[0 * k + a * 3 + 0] = gx;
                        B[1 * k + a * 3 + 1] = gy;
                        B[2 * k + a * 3 + 2] = gz;
                        B[3 * k + a * 3 + 0] = gy;  // gamma_xy
                        B[3 * k + a * 3 + 1] = gx;
                        B[4 * k + a * 3 + 1] = gz;  // gamma_yz
                        B[4 * k + a * 3 + 2] = gy;
                        B[5 * k + a * 3 + 0] = gz;  // gamma_xz
                        B[5 * k + a * 3 + 2] = gx;
                    }
                }
                const double lam = lambda_eq[e * Q + q], mu = mu_eq[e * Q + q];
                // DB = D * B with D the isotropic Hooke matrix in Voigt form
                const int nn = d;  // normal components
                for (int col = 0; col < k; ++col) {
                    double tr = 0.0;
                    for (int i = 0; i < nn; ++i) tr += B[i * k + col];
                    for (int i = 0; i < nn; ++i) DB[i * k + col] = lam * tr + 2.0 * mu * B[i * k + col];
                    for (int i = nn; i < ns; ++i) DB[i * k + col] = mu * B[i * k + col];
                }
                const double scale = w[q] * geom.det[e * Q + q];
                for (int a = 0; a < k; ++a)
                    for (int b = 0; b < k; ++b) {
                        double s = 0.0;
                        for (int i = 0; i < ns; ++i) s += B[i * k + a] * DB[i * k + b];
                        Ke[a * k + b] += scale * s;
                    }
            }
        }
    });
    return K;
}

std::vector<double> local_mass(const GeometryBatch& geom, const std::vector<double>& coeff_eq,
                               const ReferenceTables& tables) {
    const std::int64_t E = geom.E;
    const int Q = geom.Q, k = geom.k_geom;
    check_shape(coeff_eq.size(), static_cast<std::size_t>(E) * Q, "mass coefficient");
    const auto& w = tables.rule.weights;
    std::vector<double> M(static_cast<std::size_t>(E) * k * k, 0.0);
    parallel_for(static_cast<std::size_t>(E), [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e) {
            double* Me = &M[e * k * k];
            for (int q = 0; q < Q; ++q) {
                const double scale = w[q] * geom.det[e * Q + q] * coeff_eq[e * Q + q];
                const double* B = &tables.B[static_cast<std::size_t>(q) * k];
                for (int a = 0; a < k; ++a)
                    for (int b = 0; b < k; ++b) Me[a * k + b] += scale * B[a] * B[b];
            }
        }
    });
    return M;
}

std::vector<double> local_load(const GeometryBatch& geom, const std::vector<double>& source_eq,
                               const ReferenceTables& tables) {
    const std::int64_t E = geom.E;
    const int Q = geom.Q, k = geom.k_geom;
    check_shape(source_eq.size(), static_cast<std::size_t>(E) * Q, "load source");
    const auto& w = tables.rule.weights;
    std::vector<double> F(static_cast<std::size_t>(E) * k, 0.0);
    parallel_for(static_cast<std::size_t>(E), [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e) {
            double* Fe = &F[e * k];
            for (int q = 0; q < Q; ++q) {
                const double scale = w[q] * geom.det[e * Q + q] * source_eq[e * Q + q];
                const double* B = &tables.B[static_cast<std::size_t>(q) * k];
                for (int a = 0; a < k; ++a) Fe[a] += scale * B[a];
            }
        }
    });
    return F;
}

std::vector<double> local_load_vector(const GeometryBatch& geom,
                                      const std::vector<double>& source_eqc,
                                      const ReferenceTables& tables) {
    const std::int64_t E = geom.E;
    const int Q = geom.Q, kg = geom.k_geom, d = geom.d;
    check_shape(source_eqc.size(), static_cast<std::size_t>(E) * Q * d, "vector load source");
    const auto& w = tables.rule.weights;
    std::vector<double> F(static_cast<std::size_t>(E) * kg * d, 0.0);
    parallel_for(static_cast<std::size_t>(E), [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e) {
            double* Fe = &F[e * kg * d];
            for (int q = 0; q < Q; ++q) {
                const double scale = w[q] * geom.det[e * Q + q];
                const double* B = &tables.B[static_cast<std::size_t>(q) * kg];
                const double* f = &source_eqc[(e * Q + q) * d];
                for (int a = 0; a < kg; ++a)
                    for (int c = 0; c < d; ++c) Fe[a * d + c] += scale * B[a] * f[c];
            }
        }
    });
    return F;
}

std::vector<double> interpolate_nodal(const GeometryBatch& geom, const Mesh& mesh,
                                      const std::vector<double>& u_nodal,
                                      const ReferenceTables& tables) {
    const std::int64_t E = geom.E;
    const int Q = geom.Q, k = geom.k_geom;
    check_shape(u_nodal.size(), static_cast<std::size_t>(mesh.node_count()), "nodal field");
    std::vector<double> u(static_cast<std::size_t>(E) * Q, 0.0);
    parallel_for(static_cast<std::size_t>(E), [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e) {
            const std::int64_t* conn = mesh.element(static_cast<std::int64_t>(e));
            for (int q = 0; q < Q; ++q) {
                const double* B = &tables.B[static_cast<std::size_t>(q) * k];
                double s = 0.0;
                for (int a = 0; a < k; ++a) s += B[a] * u_nodal[conn[a]];
                u[e * Q + q] = s;
            }
        }
    });
    return u;
}

std::vector<double> local_reaction_load(const GeometryBatch& geom, const Mesh& mesh,
                                        const std::vector<double>& u_nodal, double eps,
                                        const ReferenceTables& tables) {
    auto u = interpolate_nodal(geom, mesh, u_nodal, tables);
    const double e2 = eps * eps;
    for (auto& v : u) v = -e2 * v * (v * v - 1.0);
    return local_load(geom, u, tables);
}

std::vector<double> reaction_tangent_coefficient(const GeometryBatch& geom, const Mesh& mesh,
                                                 const std::vector<double>& u_nodal, double eps,
                                                 const ReferenceTables& tables) {
    auto u = interpolate_nodal(geom, mesh, u_nodal, tables);
    const double e2 = eps * eps;
    for (auto& v : u) v = -e2 * (3.0 * v * v - 1.0);
    return u;
}

Lame lame_from_young(double young, double nu) {
    const double denom = (1.0 + nu) * (1.0 - 2.0 * nu);
    if (denom == 0.0) throw InputError("Poisson ratio makes lambda singular (nu = 0.5 or -1)");
    return {young * nu / denom, young / (2.0 * (1.0 + nu))};
}

double plane_stress_lambda(double lambda, double mu) {
    return 2.0 * lambda * mu / (lambda + 2.0 * mu);
}

void dump_local_tensor(const std::vector<double>& tensor, std::int64_t E, int k,
                       const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open file for writing: " + path);
    const std::int64_t k64 = k;
    out.write(reinterpret_cast<const char*>(&E), sizeof E);
    out.write(reinterpret_cast<const char*>(&k64), sizeof k64);
    out.write(reinterpret_cast<const char*>(tensor.data()),
              static_cast<std::streamsize>(tensor.size() * sizeof(double)));
}

}  // namespace tg
