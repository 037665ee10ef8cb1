#include "tg/adjoint.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

#include "tg/errors.hpp"
#include "tg/reference.hpp"

namespace tg {

namespace {

SparseOperator transpose_operator(const SparseOperator& A) {
    const auto& p = *A.pattern;
    auto tp = std::make_shared<CsrPattern>();
    tp->rows = p.rows;
    tp->offsets.assign(p.rows + 1, 0);
    for (const auto j : p.cols) ++tp->offsets[j + 1];
    for (std::int64_t i = 0; i < p.rows; ++i) tp->offsets[i + 1] += tp->offsets[i];
    tp->cols.resize(p.cols.size());
    SparseOperator T;
    T.values.resize(A.values.size());
    std::vector<std::int64_t> cursor(tp->offsets.begin(), tp->offsets.end() - 1);
    for (std::int64_t i = 0; i < p.rows; ++i)
        for (std::int64_t t = p.offsets[i]; t < p.offsets[i + 1]; ++t) {
            const auto pos = cursor[p.cols[t]]++;
            tp->cols[pos] = i;
            T.values[pos] = A.values[t];
        }
    T.pattern = tp;
    return T;
}

std::vector<double> dispatch_solve(const SparseOperator& A, const std::vector<double>& b,
                                   SolveReport& report, const SolverConfig& config) {
    std::vector<double> x;
    if (A.rows() == 0) {
        report = SolveReport{0, 0.0, true, 0.0};
        return x;
    }
    if (A.rows() <= config.direct_threshold) {
        x = dense_solve(A.dense(), b);
        report.iterations = 0;
        report.rel_residual = norm2(b) == 0.0 ? 0.0 : rel_linear_residual(A, x, b);
        report.converged = true;
        return x;
    }
    report = bicgstab(A, b, x, config);
    if (!report.converged)
        throw NumericalError("adjoint solve did not converge: rel_residual = " +
                             std::to_string(report.rel_residual));
    return x;
}

}  // namespace

std::vector<double> adjoint_solve(const SparseOperator& K_ff, const std::vector<double>& rhs_f,
                                  SolveReport& report, const SolverConfig& config) {
    if (static_cast<std::size_t>(K_ff.rows()) != rhs_f.size())
        throw InputError("adjoint_solve: shape mismatch");
    if (K_ff.symmetric) return dispatch_solve(K_ff, rhs_f, report, config);
    const auto T = transpose_operator(K_ff);
    return dispatch_solve(T, rhs_f, report, config);
}

SystemGradients gradient_products(const SparseOperator& K, const std::vector<double>& lambda,
                                  const std::vector<double>& U) {
    if (lambda.size() != static_cast<std::size_t>(K.rows()) || U.size() != lambda.size())
        throw InputError("gradient_products: shape mismatch");
    SystemGradients g;
    g.dK.pattern = K.pattern;
    g.dK.values.resize(K.values.size());
    const auto& p = *K.pattern;
    for (std::int64_t i = 0; i < p.rows; ++i)
        for (std::int64_t t = p.offsets[i]; t < p.offsets[i + 1]; ++t)
            g.dK.values[t] = lambda[i] * U[p.cols[t]];
    g.dF.resize(lambda.size());
    for (std::size_t i = 0; i < lambda.size(); ++i) g.dF[i] = -lambda[i];
    return g;
}

std::vector<double> simp_young(const std::vector<double>& rho, double p, double E_min,
                               double E_max) {
    if (E_min <= 0.0 || E_max <= E_min) throw InputError("simp_young: need 0 < E_min < E_max");
    std::vector<double> E(rho.size());
    for (std::size_t e = 0; e < rho.size(); ++e) {
        if (rho[e] < 0.0 || rho[e] > 1.0)
            throw InputError("simp_young: density outside [0, 1]");
        E[e] = E_min + std::pow(rho[e], p) * (E_max - E_min);
    }
    return E;
}

double compliance(const std::vector<double>& F, const std::vector<double>& U) {
    if (F.size() != U.size()) throw InputError("compliance: shape mismatch");
    return dot(F, U);
}

std::vector<double> simp_sensitivity(const std::vector<double>& rho, double p, double E_min,
                                     double E_max, const std::vector<double>& unit_stiffness,
                                     const Mesh& mesh, const DofMap& dofmap,
                                     const std::vector<double>& U) {
    const std::int64_t E = mesh.element_count();
    const int k = dofmap.k;
    if (static_cast<std::int64_t>(rho.size()) != E ||
        unit_stiffness.size() != static_cast<std::size_t>(E) * k * k)
        throw InputError("simp_sensitivity: shape mismatch");
    std::vector<double> sens(static_cast<std::size_t>(E));
    std::vector<double> ue(static_cast<std::size_t>(k));
    for (std::int64_t e = 0; e < E; ++e) {
        const auto* map = &dofmap.map[static_cast<std::size_t>(e) * k];
        for (int a = 0; a < k; ++a) ue[a] = U[map[a]];
        const double* Ke = &unit_stiffness[static_cast<std::size_t>(e) * k * k];
        double quad = 0.0;
        for (int a = 0; a < k; ++a) {
            double row = 0.0;
            for (int b = 0; b < k; ++b) row += Ke[a * k + b] * ue[b];
            quad += ue[a] * row;
        }
        sens[e] = -p * std::pow(rho[e], p - 1.0) * (E_max - E_min) * quad;
    }
    return sens;
}

std::vector<double> sensitivity_filter(const Mesh& mesh, double radius,
                                       const std::vector<double>& rho,
                                       const std::vector<double>& sens) {
    const std::int64_t E = mesh.element_count();
    if (static_cast<std::int64_t>(rho.size()) != E ||
        static_cast<std::int64_t>(sens.size()) != E)
        throw InputError("sensitivity_filter: shape mismatch");
    if (radius <= 0.0) throw InputError("sensitivity_filter: radius must be positive");
    const int d = mesh.dim;
    const int k = element_nodes(mesh.kind);

    std::vector<double> centroid(static_cast<std::size_t>(E) * d, 0.0);
    for (std::int64_t e = 0; e < E; ++e) {
        const auto elem = mesh.element(e);
        for (int a = 0; a < k; ++a) {
            const double* x = mesh.node(elem[a]);
            for (int c = 0; c < d; ++c) centroid[e * d + c] += x[c] / k;
        }
    }

    // bucket centroids on a grid of cell size `radius`
    std::array<double, 3> lo{1e300, 1e300, 1e300};
    for (std::int64_t e = 0; e < E; ++e)
        for (int c = 0; c < d; ++c) lo[c] = std::min(lo[c], centroid[e * d + c]);
    auto cell_key = [&](const double* x) {
        std::int64_t key = 0;
        for (int c = 0; c < d; ++c) {
            const auto idx = static_cast<std::int64_t>(std::floor((x[c] - lo[c]) / radius));
            key = key * 1048576 + idx;
        }
        return key;
    };
    std::unordered_map<std::int64_t, std::vector<std::int64_t>> buckets;
    for (std::int64_t e = 0; e < E; ++e) buckets[cell_key(&centroid[e * d])].push_back(e);

    std::vector<double> out(static_cast<std::size_t>(E));
    std::array<std::int64_t, 3> span{1, 1, 1};
    for (std::int64_t e = 0; e < E; ++e) {
        const double* ce = &centroid[e * d];
        std::array<std::int64_t, 3> base{};
        for (int c = 0; c < d; ++c)
            base[c] = static_cast<std::int64_t>(std::floor((ce[c] - lo[c]) / radius));
        double num = 0.0, den = 0.0;
        std::array<std::int64_t, 3> off{};
        for (off[0] = -span[0]; off[0] <= span[0]; ++off[0])
            for (off[1] = -span[1]; off[1] <= span[1]; ++off[1])
                for (off[2] = d == 3 ? -1 : 0; off[2] <= (d == 3 ? 1 : 0); ++off[2]) {
                    std::int64_t key = 0;
                    for (int c = 0; c < d; ++c) key = key * 1048576 + (base[c] + off[c]);
                    const auto it = buckets.find(key);
                    if (it == buckets.end()) continue;
                    for (const auto j : it->second) {
                        double dist2 = 0.0;
                        for (int c = 0; c < d; ++c) {
                            const double dx = ce[c] - centroid[j * d + c];
                            dist2 += dx * dx;
                        }
                        const double w = radius - std::sqrt(dist2);
                        if (w <= 0.0) continue;
                        num += w * rho[j] * sens[j];
                        den += w;
                    }
                }
        out[e] = num / (std::max(rho[e], 1e-3) * den);
    }
    return out;
}

std::vector<double> element_volumes(const Mesh& mesh) {
    const auto tables = reference_tables(mesh.kind, default_stiffness_degree(mesh.kind));
    const auto geom = batch_geometry(mesh, tables);
    std::vector<double> vol(static_cast<std::size_t>(geom.E), 0.0);
    for (std::int64_t e = 0; e < geom.E; ++e)
        for (int q = 0; q < geom.Q; ++q)
            vol[e] += tables.rule.weights[q] * geom.det[e * geom.Q + q];
    return vol;
}

double volume_fraction(const std::vector<double>& rho, const std::vector<double>& volumes) {
    if (rho.size() != volumes.size()) throw InputError("volume_fraction: shape mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t e = 0; e < rho.size(); ++e) {
        num += rho[e] * volumes[e];
        den += volumes[e];
    }
    return num / den;
}

MmaOptimizer::MmaOptimizer(std::size_t n, MmaConfig config) : config_(config), n_(n) {
    low_.assign(n, 0.0);
    upp_.assign(n, 0.0);
    x1_.assign(n, 0.0);
    x2_.assign(n, 0.0);
}

std::vector<double> MmaOptimizer::update(const std::vector<double>& rho,
                                         const std::vector<double>& dcost,
                                         const std::vector<double>& volumes, double vol_limit) {
    if (rho.size() != n_ || dcost.size() != n_ || volumes.size() != n_)
        throw InputError("MmaOptimizer::update: shape mismatch");
    const double range = config_.rho_max - config_.rho_min;
    double vtot = 0.0;
    for (const auto v : volumes) vtot += v;

    // moving asymptotes
    if (iter_ < 2) {
        for (std::size_t j = 0; j < n_; ++j) {
            low_[j] = rho[j] - config_.asymptote_init * range;
            upp_[j] = rho[j] + config_.asymptote_init * range;
        }
    } else {
        for (std::size_t j = 0; j < n_; ++j) {
            const double osc = (rho[j] - x1_[j]) * (x1_[j] - x2_[j]);
            const double gamma = osc > 0.0   ? config_.asymptote_expand
                                 : osc < 0.0 ? config_.asymptote_shrink
                                             : 1.0;
            double lo = rho[j] - gamma * (x1_[j] - low_[j]);
            double up = rho[j] + gamma * (upp_[j] - x1_[j]);
            lo = std::clamp(lo, rho[j] - 10.0 * range, rho[j] - 0.01 * range);
            up = std::clamp(up, rho[j] + 0.01 * range, rho[j] + 10.0 * range);
            low_[j] = lo;
            upp_[j] = up;
        }
    }

    std::vector<double> alpha(n_), beta(n_), p0(n_), q0(n_), p1(n_);
    for (std::size_t j = 0; j < n_; ++j) {
        alpha[j] = std::max({config_.rho_min, low_[j] + 0.1 * (rho[j] - low_[j]),
                             rho[j] - config_.move_limit});
        beta[j] = std::min({config_.rho_max, upp_[j] - 0.1 * (upp_[j] - rho[j]),
                            rho[j] + config_.move_limit});
        const double du = upp_[j] - rho[j];
        const double dl = rho[j] - low_[j];
        const double dfp = std::max(dcost[j], 0.0);
        const double dfm = std::max(-dcost[j], 0.0);
        const double eps = 1e-9 / range;
        p0[j] = du * du * (1.001 * dfp + 0.001 * dfm + eps);
        q0[j] = dl * dl * (0.001 * dfp + 1.001 * dfm + eps);
        p1[j] = du * du * (volumes[j] / vtot);  // linear volume constraint
    }

    auto primal = [&](double lam, std::vector<double>& x) {
        for (std::size_t j = 0; j < n_; ++j) {
            const double sp = std::sqrt(p0[j] + lam * p1[j]);
            const double sq = std::sqrt(q0[j]);
            x[j] = std::clamp((low_[j] * sp + upp_[j] * sq) / (sp + sq), alpha[j], beta[j]);
        }
    };
    auto constraint = [&](const std::vector<double>& x) {
        double v = 0.0;
        for (std::size_t j = 0; j < n_; ++j) v += volumes[j] * x[j];
        return v / vtot - vol_limit;
    };

    std::vector<double> x(n_);
    infeasible_ = false;
    primal(0.0, x);
    if (constraint(x) > 0.0) {
        double lo = 0.0, hi = 1.0;
        primal(hi, x);
        int guard = 0;
        while (constraint(x) > 0.0 && guard++ < 200) {
            lo = hi;
            hi *= 2.0;
            primal(hi, x);
        }
        if (constraint(x) > 0.0) {
            // even lambda -> inf cannot reach the volume bound: project to the
            // box lower corner and report infeasibility
            infeasible_ = true;
            x = alpha;
            x2_ = x1_;
            x1_ = rho;
            ++iter_;
            return x;
        }
        while (hi - lo > config_.bisect_tol * std::max(1.0, hi)) {
            const double mid = 0.5 * (lo + hi);
            primal(mid, x);
            if (constraint(x) > 0.0)
                lo = mid;
            else
                hi = mid;
        }
        primal(hi, x);
    }

    x2_ = x1_;
    x1_ = rho;
    ++iter_;
    return x;
}

}  // namespace tg
