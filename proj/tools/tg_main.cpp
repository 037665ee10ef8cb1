#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tg/adjoint.hpp"
#include "tg/batch.hpp"
#include "tg/config.hpp"
#include "tg/errors.hpp"
#include "tg/gmsh_io.hpp"
#include "tg/mesh.hpp"
#include "tg/parallel.hpp"
#include "tg/physics.hpp"
#include "tg/routing.hpp"
#include "tg/solver.hpp"
#include "tg/timestep.hpp"
#include "tg/topopt.hpp"
#include "tg/vtk.hpp"

namespace fs = std::filesystem;
using namespace tg;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

ElementKind parse_kind(const std::string& name) {
    if (name == "tri3") return ElementKind::TRI3;
    if (name == "quad4") return ElementKind::QUAD4;
    if (name == "tet4") return ElementKind::TET4;
    throw InputError("unknown element kind: " + name + " (expected tri3|quad4|tet4)");
}

Mesh build_mesh(const Config& cfg) {
    const auto source = cfg.get("mesh", "source", "grid");
    if (source == "file") {
        return load_gmsh(cfg.require("mesh", "file"));
    }
    if (source != "grid") throw InputError("mesh.source must be grid or file");
    const auto kind = parse_kind(cfg.get("mesh", "element", "quad4"));
    const int d = element_dim(kind);
    std::vector<double> def_ext(static_cast<std::size_t>(d), 1.0);
    std::vector<std::int64_t> def_div(static_cast<std::size_t>(d), 8);
    const auto extents = cfg.get_doubles("mesh", "extents", def_ext);
    const auto divisions = cfg.get_ints("mesh", "divisions", def_div);
    return generate_grid(kind, extents, divisions);
}

// grid cache for the routing precompute, keyed by the mesh content hash
RoutingMatrices routing_for(const Config& cfg, const Mesh& mesh, const DofMap& dofmap) {
    const auto cache = cfg.get("mesh", "routing_cache", "");
    if (!cache.empty()) {
        RoutingMatrices routing;
        const auto key = mesh.content_hash() + 0x9e3779b97f4a7c15ull * dofmap.components;
        if (load_routing(routing, key, cache)) return routing;
        routing = build_routing(mesh, dofmap);
        save_routing(routing, key, cache);
        return routing;
    }
    return build_routing(mesh, dofmap);
}

std::pair<std::vector<double>, std::vector<double>> bounding_box(const Mesh& mesh) {
    std::vector<double> lo(mesh.dim, 1e300), hi(mesh.dim, -1e300);
    for (std::int64_t i = 0; i < mesh.node_count(); ++i) {
        const double* x = mesh.node(i);
        for (int c = 0; c < mesh.dim; ++c) {
            lo[c] = std::min(lo[c], x[c]);
            hi[c] = std::max(hi[c], x[c]);
        }
    }
    return {lo, hi};
}

std::vector<std::int64_t> select_nodes(const Mesh& mesh, const std::string& selector) {
    if (selector == "none") return {};
    if (selector == "boundary") {
        if (!mesh.boundary_nodes.empty()) return mesh.boundary_nodes;
        return topological_boundary(mesh);
    }
    if (selector.rfind("tag:", 0) == 0) {
        const auto name = selector.substr(4);
        const auto it = mesh.boundary_tags.find(name);
        if (it == mesh.boundary_tags.end())
            throw InputError("mesh has no boundary tag '" + name + "'");
        return it->second;
    }
    const auto [lo, hi] = bounding_box(mesh);
    int axis = -1;
    double value = 0.0;
    if (selector == "left") {
        axis = 0;
        value = lo[0];
    } else if (selector == "right") {
        axis = 0;
        value = hi[0];
    } else if (selector == "bottom") {
        axis = 1;
        value = lo[1];
    } else if (selector == "top") {
        axis = 1;
        value = hi[1];
    } else if (selector == "back" && mesh.dim > 2) {
        axis = 2;
        value = lo[2];
    } else if (selector == "front" && mesh.dim > 2) {
        axis = 2;
        value = hi[2];
    } else {
        throw InputError("unknown boundary selector: " + selector);
    }
    if (axis >= mesh.dim) throw InputError("boundary selector out of dimension: " + selector);
    return select_boundary(mesh, axis_plane(mesh, axis, value));
}

std::vector<std::int64_t> dirichlet_nodes_from_config(const Config& cfg, const Mesh& mesh,
                                                      const std::string& fallback) {
    auto selectors = cfg.get_strings("problem", "dirichlet");
    if (selectors.empty() && !fallback.empty()) selectors.push_back(fallback);
    std::vector<std::int64_t> nodes;
    for (const auto& s : selectors) {
        const auto part = select_nodes(mesh, s);
        nodes.insert(nodes.end(), part.begin(), part.end());
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
}

// "<number>" | "checkerboard:<K>" | "multisine:<K>,<r>"
CoefficientField make_field(const std::string& text, std::uint64_t seed) {
    if (text.rfind("checkerboard:", 0) == 0)
        return checkerboard_source(std::stoi(text.substr(13)));
    if (text.rfind("multisine:", 0) == 0) {
        const auto args = parse_double_list(text.substr(10));
        if (args.size() != 2) throw InputError("multisine needs K,r: " + text);
        return multi_sine_field(static_cast<int>(args[0]), args[1], seed);
    }
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw InputError("cannot parse coefficient: " + text);
    return CoefficientField::constant(v);
}

std::vector<double> nodal_values(const Mesh& mesh, const std::function<double(const double*)>& f) {
    std::vector<double> out(static_cast<std::size_t>(mesh.node_count()));
    for (std::int64_t i = 0; i < mesh.node_count(); ++i) out[i] = f(mesh.node(i));
    return out;
}

constexpr double kPi = 3.14159265358979323846;

std::vector<double> initial_state(const Config& cfg, const Mesh& mesh, std::uint64_t seed) {
    const auto spec = cfg.get("time", "initial", "multisine:6,0.5");
    if (spec == "zero") return std::vector<double>(mesh.node_count(), 0.0);
    if (spec == "eigenmode")
        return nodal_values(
            mesh, [](const double* x) { return std::sin(kPi * x[0]) * std::sin(kPi * x[1]); });
    if (spec.rfind("multisine:", 0) == 0) {
        const auto args = parse_double_list(spec.substr(10));
        if (args.size() != 2) throw InputError("multisine needs K,r: " + spec);
        const auto field = multi_sine_field(static_cast<int>(args[0]), args[1], seed);
        return nodal_values(mesh, [&field](const double* x) { return field.at(x); });
    }
    throw InputError("unknown time.initial: " + spec);
}

SolverConfig solver_from_config(const Config& cfg) {
    SolverConfig sc;
    sc.tol_rel = cfg.get_double("solver", "tol_rel", sc.tol_rel);
    sc.tol_abs = cfg.get_double("solver", "tol_abs", sc.tol_abs);
    sc.max_iter = cfg.get_int("solver", "max_iter", sc.max_iter);
    sc.direct_threshold = cfg.get_int("solver", "direct_threshold", sc.direct_threshold);
    return sc;
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::vector<std::string> overrides;
};

Config prepare(const CommonOpts& opts, bool config_required = true) {
    Config cfg;
    if (!opts.config_path.empty())
        cfg = Config::load(opts.config_path);
    else if (config_required)
        throw InputError("--config is required");
    for (const auto& o : opts.overrides) cfg.apply_override(o);
    set_thread_count(opts.threads);
    return cfg;
}

std::uint64_t seed_of(const CommonOpts& opts, const Config& cfg) {
    if (opts.seed_set) return opts.seed;
    return static_cast<std::uint64_t>(cfg.get_int("problem", "seed", 0));
}

fs::path out_dir_of(const CommonOpts& opts, const Config& cfg) {
    auto dir = opts.out_dir.empty() ? cfg.get("output", "dir", "out") : opts.out_dir;
    fs::create_directories(dir);
    return dir;
}

int cmd_solve(const CommonOpts& opts) {
    const auto cfg = prepare(opts);
    const auto out = out_dir_of(opts, cfg);
    const auto seed = seed_of(opts, cfg);
    const auto solver = solver_from_config(cfg);

    const auto mesh = build_mesh(cfg);
    const auto kind_name = cfg.get("problem", "kind", "poisson");

    ProblemSpec ps;
    int components = 1;
    if (kind_name == "poisson") {
        ps.kind = ProblemKind::PoissonDiffusion;
        ps.diffusion = make_field(cfg.get("problem", "diffusion", "1.0"), seed);
        if (cfg.has("problem", "source"))
            ps.source.push_back(make_field(cfg.get("problem", "source", "1.0"), seed));
        else
            ps.source.push_back(CoefficientField::constant(1.0));
    } else if (kind_name == "elasticity") {
        ps.kind = ProblemKind::LinearElasticity;
        components = mesh.dim;
        const double young = cfg.get_double("problem", "young", 1.0);
        const double nu = cfg.get_double("problem", "nu", 0.3);
        const auto [lam, mu] = lame_from_young(young, nu);
        ps.lambda = CoefficientField::constant(lam);
        ps.mu = CoefficientField::constant(mu);
        ps.plane_stress = cfg.get_bool("problem", "plane_stress", false);
        std::vector<double> def_bf(static_cast<std::size_t>(mesh.dim), 0.0);
        const auto bf = cfg.get_doubles("problem", "body_force", def_bf);
        if (static_cast<int>(bf.size()) != mesh.dim)
            throw InputError("problem.body_force needs one entry per dimension");
        for (const auto v : bf) ps.source.push_back(CoefficientField::constant(v));
    } else {
        throw InputError("problem.kind must be poisson or elasticity for solve");
    }

    const auto dofmap = build_dofmap(mesh, components);
    const auto routing = routing_for(cfg, mesh, dofmap);

    const auto nodes = dirichlet_nodes_from_config(cfg, mesh, "boundary");
    const auto dofs = node_dofs(nodes, components);
    const double gval = cfg.get_double("problem", "dirichlet_value", 0.0);
    ps.dirichlet_dofs = dofs;
    ps.dirichlet_values.assign(dofs.size(), gval);

    const double t0 = now_seconds();
    const auto sysm = assemble(ps, mesh, dofmap, routing);
    const auto sys = condense(sysm.K, sysm.F, ps.dirichlet_dofs, ps.dirichlet_values);
    SolveReport report;
    const auto U = solve_condensed(sys, report, solver);
    const double elapsed = now_seconds() - t0;

    const auto u_f = sys.restrict_free(U);
    const double relres =
        norm2(sys.F_f) == 0.0 ? 0.0 : rel_linear_residual(sys.K_ff, u_f, sys.F_f);

    std::vector<VtkField> fields;
    if (components == 1)
        fields.push_back({"u", 1, U, false});
    else
        fields.push_back({"displacement", components, U, false});
    write_vtk(mesh, fields, (out / "solution.vtk").string());

    CsvWriter csv((out / "report.csv").string(),
                  {"dofs", "free_dofs", "iterations", "rel_residual", "converged"});
    csv.row({static_cast<double>(dofmap.N), static_cast<double>(sys.free_dofs.size()),
             static_cast<double>(report.iterations), relres, report.converged ? 1.0 : 0.0});

    std::cout << "RelRes = " << CsvWriter::format(relres) << " (" << report.iterations
              << " iterations, " << elapsed << " s)\n";
    return 0;
}

int cmd_timestep(const CommonOpts& opts) {
    const auto cfg = prepare(opts);
    const auto out = out_dir_of(opts, cfg);
    const auto seed = seed_of(opts, cfg);
    const auto solver = solver_from_config(cfg);

    const auto mesh = build_mesh(cfg);
    const auto kind_name = cfg.get("problem", "kind", "wave");
    const double dt = cfg.get_double("time", "dt", kind_name == "wave" ? 5e-4 : 1e-4);
    if (dt <= 0.0) throw InputError("time.dt must be positive");
    const auto steps = cfg.get_int("time", "steps", 100);
    if (steps < 1) throw InputError("time.steps must be >= 1");
    const auto output_every = cfg.get_int("time", "output_every", 0);

    const auto dofmap = build_dofmap(mesh, 1);
    const auto routing = routing_for(cfg, mesh, dofmap);

    ProblemSpec ps;
    ps.kind = kind_name == "allen_cahn" ? ProblemKind::AllenCahnReaction
                                        : ProblemKind::PoissonDiffusion;
    ps.diffusion = CoefficientField::constant(1.0);
    const auto sysm = assemble(ps, mesh, dofmap, routing, /*with_mass=*/true);
    const auto u0_full = initial_state(cfg, mesh, seed);

    auto write_state = [&](std::int64_t step, const std::vector<double>& u) {
        if (output_every <= 0) return;
        if (step % output_every != 0 && step != steps) return;
        char name[64];
        std::snprintf(name, sizeof name, "state_%06lld.vtk", static_cast<long long>(step));
        write_vtk(mesh, {{"u", 1, u, false}}, (out / name).string());
    };

    if (kind_name == "wave") {
        const double c = cfg.get_double("time", "wave_speed", 1.0);
        const auto scheme_name = cfg.get("time", "scheme", "central");
        WaveScheme scheme;
        if (scheme_name == "central")
            scheme = WaveScheme::CentralDifference;
        else if (scheme_name == "crank_nicolson")
            scheme = WaveScheme::CrankNicolson;
        else
            throw InputError("time.scheme must be central or crank_nicolson for wave");

        const auto nodes = dirichlet_nodes_from_config(cfg, mesh, "boundary");
        const auto dofs = node_dofs(nodes, 1);
        const std::vector<double> gvals(dofs.size(), 0.0);
        const auto sys = condense(sysm.K, sysm.F, dofs, gvals);
        const auto K_ff = sys.K_ff;
        const auto M_ff = restrict_to_free(*sysm.M, sys);

        auto u_prev = sys.restrict_free(u0_full);
        const std::vector<double> v0(u_prev.size(), 0.0);
        auto u_curr = wave_initial_step(M_ff, K_ff, u_prev, v0, dt, c, solver);

        CsvWriter csv((out / "trajectory.csv").string(),
                      {"step", "time", "residual_norm", "energy"});
        csv.row({0.0, 0.0, 0.0, wave_energy(M_ff, K_ff, u_prev, u_curr, dt, c)});
        write_state(0, sys.expand(u_prev));
        write_state(1, sys.expand(u_curr));

        for (std::int64_t s = 2; s <= steps; ++s) {
            SolveReport report;
            std::vector<double> u_next;
            try {
                u_next = wave_step(M_ff, K_ff, u_prev, u_curr, dt, c, scheme, report, solver);
            } catch (const NumericalError& err) {
                throw NumericalError("wave step " + std::to_string(s) + ": " +
                                     std::string(err.what()));
            }
            double rnorm = 0.0;
            if (scheme == WaveScheme::CentralDifference)
                rnorm = norm2(wave_residual(M_ff, K_ff, u_prev, u_curr, u_next, dt, c));
            u_prev = std::move(u_curr);
            u_curr = std::move(u_next);
            csv.row({static_cast<double>(s), s * dt, rnorm,
                     wave_energy(M_ff, K_ff, u_prev, u_curr, dt, c)});
            write_state(s, sys.expand(u_curr));
        }
        std::cout << "wave: " << steps << " steps complete\n";
        return 0;
    }

    if (kind_name != "allen_cahn")
        throw InputError("problem.kind must be wave or allen_cahn for timestep");
    const double a = cfg.get_double("time", "alpha", 1.0);
    const double eps = cfg.get_double("time", "eps", 1.0);
    NewtonConfig newton;
    newton.tol = cfg.get_double("time", "newton_tol", newton.tol);
    newton.max_iter = static_cast<int>(cfg.get_int("time", "newton_max_iter", newton.max_iter));

    const auto nodes = dirichlet_nodes_from_config(cfg, mesh, "none");
    const auto dofs = node_dofs(nodes, 1);
    const std::vector<double> gvals(dofs.size(), 0.0);

    AllenCahnStepper stepper(mesh, dofmap, routing, *sysm.M, sysm.K, dofs, gvals, dt, a, eps,
                             newton, solver);
    auto u = u0_full;
    for (std::size_t i = 0; i < dofs.size(); ++i) u[dofs[i]] = gvals[i];

    CsvWriter csv((out / "trajectory.csv").string(),
                  {"step", "time", "residual_norm", "newton_iterations"});
    write_state(0, u);
    for (std::int64_t s = 1; s <= steps; ++s) {
        double rnorm = 0.0;
        int nit = 0;
        try {
            u = stepper.step(u, &rnorm, &nit);
        } catch (const NumericalError& err) {
            throw NumericalError("allen-cahn step " + std::to_string(s) + ": " +
                                 std::string(err.what()));
        }
        csv.row({static_cast<double>(s), s * dt, rnorm, static_cast<double>(nit)});
        write_state(s, u);
    }
    std::cout << "allen_cahn: " << steps << " steps complete\n";
    return 0;
}

int cmd_topopt(const CommonOpts& opts) {
    const auto cfg = prepare(opts);
    const auto out = out_dir_of(opts, cfg);
    const auto solver = solver_from_config(cfg);

    Mesh mesh;
    if (cfg.has("mesh", "source") || cfg.has("mesh", "divisions") || cfg.has("mesh", "file")) {
        mesh = build_mesh(cfg);
    } else {
        mesh = generate_grid(ElementKind::QUAD4, {60.0, 30.0}, {60, 30});
    }
    if (mesh.dim != 2 && mesh.dim != 3) throw InputError("topopt: unsupported dimension");

    SimpParams params;
    params.p = cfg.get_double("topopt", "p", params.p);
    params.E_max = cfg.get_double("topopt", "e_max", params.E_max);
    params.E_min = cfg.get_double("topopt", "e_min", params.E_min);
    params.nu = cfg.get_double("topopt", "nu", params.nu);
    params.vol_limit = cfg.get_double("topopt", "vol_frac", params.vol_limit);
    params.filter_radius = cfg.get_double("topopt", "filter_radius", params.filter_radius);
    params.move_limit = cfg.get_double("topopt", "move_limit", params.move_limit);
    params.iterations = static_cast<int>(cfg.get_int("topopt", "iterations", params.iterations));
    params.plane_stress = cfg.get_bool("topopt", "plane_stress", params.plane_stress);

    const auto dofmap = build_dofmap(mesh, mesh.dim);
    const auto [lo, hi] = bounding_box(mesh);

    // fixed support: left edge, all components
    const auto fixed_nodes = select_nodes(mesh, "left");
    const auto dirichlet_dofs = node_dofs(fixed_nodes, mesh.dim);
    const std::vector<double> dirichlet_values(dirichlet_dofs.size(), 0.0);

    // distributed traction on the lower part of the right edge
    const double band = cfg.get_double("topopt", "load_band", 0.1);
    std::vector<double> def_traction(static_cast<std::size_t>(mesh.dim), 0.0);
    def_traction[1] = -100.0;
    const auto traction = cfg.get_doubles("topopt", "traction", def_traction);
    const double ymax = lo[1] + band * (hi[1] - lo[1]);
    const double tol = 1e-9 * mesh.diameter();
    const auto load_nodes = select_boundary(mesh, [&](const double* x) {
        return std::abs(x[0] - hi[0]) <= tol && x[1] <= ymax + tol;
    });
    if (load_nodes.empty()) throw InputError("topopt: no load application nodes found");
    const auto F = traction_load(mesh, dofmap, load_nodes, traction);

    std::vector<std::int64_t> def_snaps{0, 5, 10, 15, 20, 25, 30, 50};
    const auto snaps64 = cfg.get_ints("topopt", "snapshots", def_snaps);
    std::vector<int> snapshots(snaps64.begin(), snaps64.end());

    const auto result =
        topopt_run(mesh, params, F, dirichlet_dofs, dirichlet_values, snapshots, solver);

    CsvWriter csv((out / "history.csv").string(),
                  {"iteration", "compliance", "volume_fraction", "solve_iterations"});
    for (const auto& row : result.history)
        csv.row({static_cast<double>(row.iteration), row.compliance, row.volume,
                 static_cast<double>(row.solve_iterations)});

    for (const auto& [it, density] : result.snapshots) {
        char name[64];
        std::snprintf(name, sizeof name, "density_%04d.vtk", it);
        write_vtk(mesh, {{"density", 1, density, true}}, (out / name).string());
    }
    write_vtk(mesh,
              {{"density", 1, result.density, true},
               {"displacement", mesh.dim, result.displacement, false}},
              (out / "final.vtk").string());

    const double c0 = result.history.front().compliance;
    const double cN = result.history.back().compliance;
    std::cout << "compliance " << CsvWriter::format(c0) << " -> " << CsvWriter::format(cN)
              << " (" << CsvWriter::format(100.0 * (1.0 - cN / c0)) << "% reduction over "
              << params.iterations << " iterations)\n";
    return 0;
}

struct BenchSample {
    std::string method;
    std::int64_t E;
    std::int64_t dofs;
    std::int64_t batch;
    double seconds;
    bool oracle_match;
};

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    // least squares on log-log
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int cmd_bench(const CommonOpts& opts) {
    const auto cfg = prepare(opts, /*config_required=*/false);
    const auto out = out_dir_of(opts, cfg);

    const auto kind = parse_kind(cfg.get("bench", "element", "quad4"));
    std::vector<std::int64_t> def_counts{10000, 100000, 1000000};
    const auto counts = cfg.get_ints("bench", "element_counts", def_counts);
    std::vector<std::int64_t> def_batches{1, 4, 16, 64};
    const auto batches = cfg.get_ints("bench", "batch_sizes", def_batches);
    const int repeats = static_cast<int>(cfg.get_int("bench", "repeats", 3));

    std::vector<BenchSample> samples;
    std::ofstream log((out / "bench_timings.txt").string());
    auto record = [&](const BenchSample& s) {
        samples.push_back(s);
        log << s.method << " E=" << s.E << " dofs=" << s.dofs << " batch=" << s.batch
            << " seconds=" << s.seconds << " oracle_match=" << (s.oracle_match ? 1 : 0) << "\n";
        std::cout << s.method << " E=" << s.E << " batch=" << s.batch << " " << s.seconds
                  << " s\n";
    };

    std::vector<double> es, t_reduce, t_oracle;
    for (const auto E_target : counts) {
        // square-ish grid with ~E_target cells
        const auto side = static_cast<std::int64_t>(std::llround(std::sqrt(
            static_cast<double>(E_target) / (kind == ElementKind::TRI3 ? 2.0 : 1.0))));
        const auto mesh = generate_grid(kind, {1.0, 1.0}, {std::max<std::int64_t>(side, 1),
                                                           std::max<std::int64_t>(side, 1)});
        const auto dofmap = build_dofmap(mesh, 1);
        const auto routing = build_routing(mesh, dofmap);
        const auto tables = reference_tables(mesh.kind, default_stiffness_degree(mesh.kind));
        const auto geom = batch_geometry(mesh, tables);
        const auto grads = push_forward(geom, tables);
        const std::vector<double> coeff(static_cast<std::size_t>(geom.E) * geom.Q, 1.0);
        const auto K_local = local_stiffness_diffusion(geom, grads, coeff, tables);
        const auto F_local = local_load(geom, coeff, tables);

        // correctness gate before timing
        const auto K = reduce_matrix(routing, K_local);
        const auto F = reduce_vector(routing, F_local);
        SparseOperator K_ref;
        std::vector<double> F_ref;
        scatter_add_oracle(mesh, dofmap, K_local, F_local, K_ref, F_ref);
        bool match = K.values == K_ref.values && F == F_ref;
        if (!match) {
            std::cerr << "bench: reduce does not match the scatter-add oracle at E="
                      << mesh.element_count() << "\n";
            return 1;
        }

        double best_reduce = 1e300, best_oracle = 1e300, best_map = 1e300;
        for (int rep = 0; rep < repeats; ++rep) {
            double t0 = now_seconds();
            const auto Kl = local_stiffness_diffusion(geom, grads, coeff, tables);
            best_map = std::min(best_map, now_seconds() - t0);
            t0 = now_seconds();
            auto K2 = reduce_matrix(routing, Kl);
            best_reduce = std::min(best_reduce, now_seconds() - t0);
            t0 = now_seconds();
            SparseOperator K3;
            std::vector<double> F3;
            scatter_add_oracle(mesh, dofmap, Kl, F_local, K3, F3);
            best_oracle = std::min(best_oracle, now_seconds() - t0);
        }
        record({"map_local_stiffness", mesh.element_count(), dofmap.N, 1, best_map, true});
        record({"reduce_matrix", mesh.element_count(), dofmap.N, 1, best_reduce, true});
        record({"scatter_add_oracle", mesh.element_count(), dofmap.N, 1, best_oracle, true});
        es.push_back(static_cast<double>(mesh.element_count()));
        t_reduce.push_back(best_reduce);
        t_oracle.push_back(best_oracle + best_map);
    }

    // batch sweep: many load assemblies sharing one routing/geometry precompute
    {
        const auto mesh = generate_grid(kind, {1.0, 1.0}, {100, 100});
        const auto dofmap = build_dofmap(mesh, 1);
        const auto routing = build_routing(mesh, dofmap);
        const auto tables = reference_tables(mesh.kind, default_mass_degree(mesh.kind));
        std::vector<double> bs, tb;
        for (const auto B : batches) {
            double best = 1e300;
            for (int rep = 0; rep < repeats; ++rep) {
                const double t0 = now_seconds();
                const auto geom = batch_geometry(mesh, tables);
                for (std::int64_t b = 0; b < B; ++b) {
                    const auto src = checkerboard_source(static_cast<int>(2 + b % 7))
                                         .evaluate(mesh, tables, geom);
                    const auto Fl = local_load(geom, src, tables);
                    const auto Fb = reduce_vector(routing, Fl);
                    if (Fb.empty()) return 1;
                }
                best = std::min(best, now_seconds() - t0);
            }
            record({"batched_load", mesh.element_count(), dofmap.N, B, best, true});
            bs.push_back(static_cast<double>(B));
            tb.push_back(best);
        }
        const double batch_slope = fit_slope(bs, tb);
        const double e_slope = fit_slope(es, t_reduce);
        log << "reduce_matrix E-sweep slope = " << e_slope << "\n";
        log << "batched_load batch slope = " << batch_slope << "\n";
        std::cout << "reduce_matrix E-sweep slope = " << e_slope << "\n";
        std::cout << "batched_load batch slope = " << batch_slope << "\n";
    }

    // deterministic CSV: sizes and the oracle gate, no wall times (those live
    // in bench_timings.txt so reruns stay byte-identical)
    CsvWriter csv((out / "bench.csv").string(), {"method", "E", "dofs", "batch", "oracle_match"});
    for (const auto& s : samples)
        csv.row_mixed({s.method, std::to_string(s.E), std::to_string(s.dofs),
                       std::to_string(s.batch), s.oracle_match ? "1" : "0"});
    return 0;
}

struct VerifyCheck {
    std::string name;
    bool pass;
    std::string detail;
};

double l2_error(const Mesh& mesh, const std::vector<double>& u_nodal,
                const std::function<double(const double*)>& exact) {
    const auto tables = reference_tables(mesh.kind, default_mass_degree(mesh.kind));
    const auto geom = batch_geometry(mesh, tables);
    const auto uq = interpolate_nodal(geom, mesh, u_nodal, tables);
    double err2 = 0.0;
    for (std::int64_t e = 0; e < geom.E; ++e)
        for (int q = 0; q < geom.Q; ++q) {
            const double diff =
                uq[e * geom.Q + q] - exact(&geom.phys_qpoints[(e * geom.Q + q) * geom.d]);
            err2 += tables.rule.weights[q] * geom.det[e * geom.Q + q] * diff * diff;
        }
    return std::sqrt(err2);
}

int cmd_verify(const CommonOpts& opts) {
    const auto cfg = prepare(opts, /*config_required=*/false);
    const auto out = out_dir_of(opts, cfg);
    const double perturb = cfg.get_double("solver", "perturb_k", 0.0);
    const auto solver = solver_from_config(cfg);

    auto perturbed = [&](SparseOperator K) {
        if (perturb != 0.0)
            for (auto& v : K.values) v *= 1.0 + perturb;
        return K;
    };

    std::vector<VerifyCheck> checks;

    // reference-triangle local operators
    {
        Mesh tri;
        tri.kind = ElementKind::TRI3;
        tri.dim = 2;
        tri.nodes = {0, 0, 1, 0, 0, 1};
        tri.elements = {0, 1, 2};
        const auto t1 = reference_tables(ElementKind::TRI3, 1);
        const auto t2 = reference_tables(ElementKind::TRI3, 2);
        const auto g1 = batch_geometry(tri, t1);
        const auto g2 = batch_geometry(tri, t2);
        const auto gr = push_forward(g1, t1);
        const auto Kl = local_stiffness_diffusion(g1, gr, {1.0}, t1);
        const auto Fl = local_load(g1, {1.0}, t1);
        const auto Ml = local_mass(g2, std::vector<double>(t2.rule.Q, 1.0), t2);
        const double exK[9] = {1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5};
        const double exM[9] = {2.0 / 24, 1.0 / 24, 1.0 / 24, 1.0 / 24, 2.0 / 24,
                               1.0 / 24, 1.0 / 24, 1.0 / 24, 2.0 / 24};
        double err = 0.0;
        for (int i = 0; i < 9; ++i)
            err = std::max({err, std::abs(Kl[i] - exK[i]), std::abs(Ml[i] - exM[i])});
        for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(Fl[i] - 1.0 / 6));
        checks.push_back({"reference_triangle_operators", err < 1e-14,
                          "max deviation " + CsvWriter::format(err)});
    }

    // mass matrix entries sum to the domain volume
    {
        const auto mesh = generate_grid(ElementKind::QUAD4, {1.0, 1.0}, {8, 8});
        const auto dofmap = build_dofmap(mesh, 1);
        const auto routing = build_routing(mesh, dofmap);
        ProblemSpec ps;
        ps.kind = ProblemKind::Mass;
        const auto sysm = assemble(ps, mesh, dofmap, routing);
        const auto K = perturbed(sysm.K);
        double sum = 0.0;
        for (const auto v : K.values) sum += v;
        checks.push_back({"mass_sum_equals_volume", std::abs(sum - 1.0) < 1e-12,
                          "sum " + CsvWriter::format(sum)});
    }

    // manufactured Poisson convergence
    {
        auto exact = [](const double* x) { return std::sin(kPi * x[0]) * std::sin(kPi * x[1]); };
        std::vector<double> errors;
        for (const std::int64_t n : {8, 16, 32}) {
            const auto mesh = generate_grid(ElementKind::TRI3, {1.0, 1.0}, {n, n});
            const auto dofmap = build_dofmap(mesh, 1);
            const auto routing = build_routing(mesh, dofmap);
            ProblemSpec ps;
            ps.source.push_back(CoefficientField::analytic([exact](const double* x) {
                return 2.0 * kPi * kPi * std::sin(kPi * x[0]) * std::sin(kPi * x[1]);
            }));
            auto sysm = assemble(ps, mesh, dofmap, routing);
            sysm.K = perturbed(sysm.K);
            const auto dofs = node_dofs(mesh.boundary_nodes, 1);
            const auto sys = condense(sysm.K, sysm.F, dofs, std::vector<double>(dofs.size()));
            SolveReport report;
            const auto U = solve_condensed(sys, report, solver);
            errors.push_back(l2_error(mesh, U, exact));
        }
        const double o1 = std::log2(errors[0] / errors[1]);
        const double o2 = std::log2(errors[1] / errors[2]);
        checks.push_back({"poisson_2d_convergence_order", std::min(o1, o2) >= 1.8,
                          "orders " + CsvWriter::format(o1) + ", " + CsvWriter::format(o2)});
    }

    // 3D Poisson, unit cube, f = 1, iterative path
    {
        const auto mesh = generate_grid(ElementKind::TET4, {1.0, 1.0, 1.0}, {16, 16, 16});
        const auto dofmap = build_dofmap(mesh, 1);
        const auto routing = build_routing(mesh, dofmap);
        ProblemSpec ps;
        ps.source.push_back(CoefficientField::constant(1.0));
        auto sysm = assemble(ps, mesh, dofmap, routing);
        sysm.K = perturbed(sysm.K);
        const auto dofs = node_dofs(mesh.boundary_nodes, 1);
        const auto sys = condense(sysm.K, sysm.F, dofs, std::vector<double>(dofs.size()));
        SolveReport report;
        bool ok = true;
        double relres = 1.0;
        double umax = 0.0;
        try {
            const auto U = solve_condensed(sys, report, solver);
            const auto u_f = sys.restrict_free(U);
            relres = rel_linear_residual(sys.K_ff, u_f, sys.F_f);
            for (const auto v : U) umax = std::max(umax, v);
            ok = relres < 1e-10 && umax > 0.0;
        } catch (const NumericalError&) {
            ok = false;
        }
        checks.push_back({"poisson_3d_unit_cube", ok,
                          "rel_residual " + CsvWriter::format(relres) + ", max(u) " +
                              CsvWriter::format(umax)});
    }

    // elasticity: rigid-body modes annihilated, condensed solve converges
    {
        const auto mesh = generate_grid(ElementKind::TET4, {1.0, 1.0, 1.0}, {4, 4, 4});
        const auto dofmap = build_dofmap(mesh, 3);
        const auto routing = build_routing(mesh, dofmap);
        ProblemSpec ps;
        ps.kind = ProblemKind::LinearElasticity;
        const auto [lam, mu] = lame_from_young(1.0, 0.3);
        ps.lambda = CoefficientField::constant(lam);
        ps.mu = CoefficientField::constant(mu);
        for (int c = 0; c < 3; ++c) ps.source.push_back(CoefficientField::constant(1.0));
        auto sysm = assemble(ps, mesh, dofmap, routing);
        sysm.K = perturbed(sysm.K);

        // translations and one rotation
        double worst = 0.0;
        const std::int64_t Nn = mesh.node_count();
        for (int mode = 0; mode < 4; ++mode) {
            std::vector<double> v(static_cast<std::size_t>(dofmap.N), 0.0);
            for (std::int64_t i = 0; i < Nn; ++i) {
                const double* x = mesh.node(i);
                if (mode < 3) {
                    v[i * 3 + mode] = 1.0;
                } else {
                    v[i * 3 + 0] = -x[1];
                    v[i * 3 + 1] = x[0];
                }
            }
            worst = std::max(worst, norm2(sysm.K.apply(v)) / norm2(v));
        }
        const auto dofs = node_dofs(select_nodes(mesh, "left"), 3);
        const auto sys = condense(sysm.K, sysm.F, dofs, std::vector<double>(dofs.size()));
        SolveReport report;
        bool solved = true;
        try {
            solve_condensed(sys, report, solver);
        } catch (const NumericalError&) {
            solved = false;
        }
        checks.push_back({"elasticity_rigid_body_modes", worst < 1e-10 && solved,
                          "max |K v_rigid| / |v| = " + CsvWriter::format(worst)});
    }

    // adjoint gradient vs central finite differences (diffusion coefficient)
    {
        const auto mesh = generate_grid(ElementKind::TRI3, {1.0, 1.0}, {6, 6});
        const auto dofmap = build_dofmap(mesh, 1);
        const auto routing = build_routing(mesh, dofmap);
        const auto dofs = node_dofs(mesh.boundary_nodes, 1);
        const std::vector<double> gvals(dofs.size(), 0.0);
        const std::int64_t E = mesh.element_count();

        auto forward = [&](const std::vector<double>& rho_e, std::vector<double>* U_out,
                           CondensedSystem* sys_out) {
            ProblemSpec ps;
            ps.diffusion = CoefficientField::per_element(rho_e);
            ps.source.push_back(CoefficientField::constant(1.0));
            auto sysm = assemble(ps, mesh, dofmap, routing);
            sysm.K = perturbed(sysm.K);
            auto sys = condense(sysm.K, sysm.F, dofs, gvals);
            SolveReport report;
            const auto U = solve_condensed(sys, report, solver);
            const double gamma = compliance(sysm.F, U);
            if (U_out) *U_out = U;
            if (sys_out) *sys_out = std::move(sys);
            return gamma;
        };

        std::vector<double> rho(static_cast<std::size_t>(E));
        std::mt19937_64 rng(42);
        for (auto& v : rho)
            v = 0.5 + 0.4 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);

        std::vector<double> U;
        CondensedSystem sys;
        forward(rho, &U, &sys);

        // compliance: dGamma/dU = F, solve K^T lambda = -F on free DoFs
        SolveReport arep;
        auto rhs = sys.F_f;
        for (auto& v : rhs) v = -v;
        const auto lam_f = adjoint_solve(sys.K_ff, rhs, arep, solver);
        std::vector<double> lam(static_cast<std::size_t>(dofmap.N), 0.0);
        for (std::size_t i = 0; i < sys.free_dofs.size(); ++i) lam[sys.free_dofs[i]] = lam_f[i];

        // dGamma/drho_e = lambda^T (dK/drho_e) U = lambda_e^T K_unit_e U_e
        const auto tables = reference_tables(mesh.kind, default_stiffness_degree(mesh.kind));
        const auto geom = batch_geometry(mesh, tables);
        const auto grads = push_forward(geom, tables);
        const auto K_unit = local_stiffness_diffusion(
            geom, grads, std::vector<double>(static_cast<std::size_t>(geom.E) * geom.Q, 1.0),
            tables);
        double max_rel = 0.0;
        const int k = dofmap.k;
        for (int trial = 0; trial < 20; ++trial) {
            const auto e = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(E));
            double grad = 0.0;
            const auto* map = dofmap.element(e);
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b)
                    grad += lam[map[a]] * K_unit[(e * k + a) * k + b] * U[map[b]];
            const double h = 1e-6;
            auto rp = rho, rm = rho;
            rp[e] += h;
            rm[e] -= h;
            const double fd = (forward(rp, nullptr, nullptr) - forward(rm, nullptr, nullptr)) /
                              (2.0 * h);
            const double denom = std::max(std::abs(fd), 1e-12);
            max_rel = std::max(max_rel, std::abs(grad - fd) / denom);
        }
        checks.push_back({"adjoint_gradient_vs_fd", max_rel < 1e-4,
                          "max relative deviation " + CsvWriter::format(max_rel)});
    }

    // map-reduce equals the scatter-add oracle bitwise
    {
        bool all = true;
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 10 && all; ++trial) {
            const auto kinds = std::array{ElementKind::TRI3, ElementKind::QUAD4,
                                          ElementKind::TET4};
            const auto kind = kinds[trial % 3];
            const int d = element_dim(kind);
            std::vector<std::int64_t> div;
            std::vector<double> ext;
            for (int c = 0; c < d; ++c) {
                div.push_back(2 + static_cast<std::int64_t>(rng() % 6));
                ext.push_back(0.5 + static_cast<double>(rng() % 4) * 0.5);
            }
            const auto mesh = generate_grid(kind, ext, div);
            const auto dofmap = build_dofmap(mesh, 1);
            const auto routing = build_routing(mesh, dofmap);
            const auto tables = reference_tables(kind, default_stiffness_degree(kind));
            const auto geom = batch_geometry(mesh, tables);
            const auto grads = push_forward(geom, tables);
            const std::vector<double> coeff(static_cast<std::size_t>(geom.E) * geom.Q, 1.0);
            auto Kl = local_stiffness_diffusion(geom, grads, coeff, tables);
            const auto Fl = local_load(geom, coeff, tables);
            const auto K = reduce_matrix(routing, Kl);
            const auto F = reduce_vector(routing, Fl);
            // the negative-control hook perturbs the oracle input only
            if (perturb != 0.0)
                for (auto& v : Kl) v *= 1.0 + perturb;
            SparseOperator K_ref;
            std::vector<double> F_ref;
            scatter_add_oracle(mesh, dofmap, Kl, Fl, K_ref, F_ref);
            all = K.values == K_ref.values && F == F_ref;
        }
        checks.push_back({"reduce_matches_scatter_add", all,
                          all ? "bitwise equal" : "mismatch"});
    }

    // wave residuals stay below the solver tolerance
    {
        const auto mesh = generate_grid(ElementKind::TRI3, {1.0, 1.0}, {12, 12});
        const auto dofmap = build_dofmap(mesh, 1);
        const auto routing = build_routing(mesh, dofmap);
        ProblemSpec ps;
        auto sysm = assemble(ps, mesh, dofmap, routing, true);
        sysm.K = perturbed(sysm.K);
        const auto dofs = node_dofs(mesh.boundary_nodes, 1);
        const auto sys = condense(sysm.K, sysm.F, dofs, std::vector<double>(dofs.size()));
        const auto M_ff = restrict_to_free(*sysm.M, sys);
        auto u0 = nodal_values(
            mesh, [](const double* x) { return std::sin(kPi * x[0]) * std::sin(kPi * x[1]); });
        auto up = sys.restrict_free(u0);
        const double dt = 1e-3, c = 1.0;
        auto uc = wave_initial_step(M_ff, sys.K_ff, up, std::vector<double>(up.size(), 0.0), dt,
                                    c, solver);
        double worst = 0.0;
        for (int s = 0; s < 20; ++s) {
            SolveReport rep;
            auto un = wave_step(M_ff, sys.K_ff, up, uc, dt, c, WaveScheme::CentralDifference,
                                rep, solver);
            worst = std::max(worst, norm2(wave_residual(M_ff, sys.K_ff, up, uc, un, dt, c)));
            up = std::move(uc);
            uc = std::move(un);
        }
        // residual scales with M/dt^2; compare against that magnitude
        const double scale = norm2(M_ff.apply(uc)) / (dt * dt);
        checks.push_back({"wave_step_residual", worst <= 1e-8 * std::max(scale, 1.0),
                          "max residual " + CsvWriter::format(worst)});
    }

    CsvWriter csv((out / "verify.csv").string(), {"check", "pass", "detail"});
    bool all_pass = true;
    for (const auto& c : checks) {
        csv.row_mixed({c.name, c.pass ? "1" : "0", c.detail});
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
        all_pass = all_pass && c.pass;
    }
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tensorized map-reduce FEM toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "configuration file");
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--seed", opts.seed, "random seed")
            ->each([&](const std::string&) { opts.seed_set = true; });
        sub->add_option("--threads", opts.threads, "worker count (0 = hardware)");
        sub->add_option("overrides", opts.overrides, "section.key=value overrides");
    };
    auto* solve = app.add_subcommand("solve", "steady PDE solve");
    auto* timestep = app.add_subcommand("timestep", "transient simulation");
    auto* topopt = app.add_subcommand("topopt", "compliance topology optimization");
    auto* bench = app.add_subcommand("bench", "assembly performance sweep");
    auto* verify = app.add_subcommand("verify", "correctness suite");
    for (auto* sub : {solve, timestep, topopt, bench, verify}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(opts);
        if (timestep->parsed()) return cmd_timestep(opts);
        if (topopt->parsed()) return cmd_topopt(opts);
        if (bench->parsed()) return cmd_bench(opts);
        if (verify->parsed()) return cmd_verify(opts);
    } catch (const InputError& err) {
        std::cerr << "input error: " << err.what() << "\n";
        return 2;
    } catch (const NumericalError& err) {
        std::cerr << "numerical error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 2;
}
