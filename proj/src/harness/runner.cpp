#include "qdiff/harness/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include <json.hpp>

#include "qdiff/harness/table.hpp"
#include "qdiff/lattice.hpp"
#include "qdiff/numerics.hpp"
#include "qdiff/parallel.hpp"
#include "qdiff/propagation.hpp"
#include "qdiff/rmt.hpp"
#include "qdiff/sce.hpp"
#include "qdiff/spectral.hpp"

#ifndef QDIFF_VERSION
#define QDIFF_VERSION "unknown"
#endif

namespace qdiff::harness {

namespace fs = std::filesystem;

namespace {

// compact %g rendering for metric names (values keep full precision)
std::string short_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}


using Cfg = ExperimentConfig;

class RunContext {
public:
    explicit RunContext(const Cfg& cfg) : cfg(cfg), dir_(cfg.output_dir), summary_(std::vector<Column>{{"metric", "name"}, {"value", "1"}}, true) {
        manifest.config_hash = config_hash(cfg);
        manifest.version = QDIFF_VERSION;
        fs::create_directories(dir_);
    }

    template <class F>
    void stage(const std::string& name, F&& body) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body();
        } catch (const std::exception& e) {
            manifest.failed_stage = name;
            manifest.error = e.what();
            record(name, t0);
            throw;
        }
        record(name, t0);
    }

    void write(const std::string& file, const ResultTable& table) {
        const fs::path rel(file);
        // outputs stay inside the output directory
        require(rel.has_filename() && rel == rel.filename() && file.find("..") == std::string::npos,
                "output file name must be a plain file name: '" + file + "'");
        emit_table(table, dir_ / rel);
        manifest.files.push_back({file, table.rows().size(), table.seeds});
    }

    void metric(const std::string& name, double value) { summary_.add_row({name, value}); }

    void finish() {
        write("summary.csv", summary_);
        std::ofstream f(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write manifest in '" + dir_.string() + "'");
        f << manifest_json(manifest);
    }

    const Cfg& cfg;
    RunManifest manifest;

private:
    void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
        manifest.timings.push_back(
            {name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    }

    fs::path dir_;
    ResultTable summary_;
};

TorusGrid grid_of(const Cfg& c) { return TorusGrid(c.d, c.L); }

std::vector<double> energies_or_E(const Cfg& c) { return c.energies.empty() ? std::vector<double>{c.E} : c.energies; }
std::vector<double> etas_or_eta(const Cfg& c) { return c.etas.empty() ? std::vector<double>{c.eta} : c.etas; }

double median_of(std::vector<double> v) { return median(std::move(v)); }

// ---------------------------------------------------------------- experiments

void run_figure1(RunContext& ctx) {
    const Cfg& c = ctx.cfg;
    const TorusGrid g = grid_of(c);
    const std::vector<double> times = c.time_grid();
    std::vector<TrajectoryRecord> recs(c.seeds.size());
    ctx.stage("evolve", [&] {
        for (std::size_t s = 0; s < c.seeds.size(); ++s) {
            const HamiltonianSpec spec = make_hamiltonian(g, c.lambda, c.seeds[s]);
            recs[s] = run_trajectory(spec, ComplexField::delta(g, 0), times, c.tol, 0);
        }
    });
    ResultTable fits({{"seed"}, {"beta"}, {"amplitude", "sites"}, {"wraparound"}, {"max_mass_drift"}});
    std::vector<double> betas;
    for (std::size_t s = 0; s < recs.size(); ++s) {
        const auto& r = recs[s];
        ResultTable t({{"t", "time"}, {"msd", "sites^2"}, {"root_msd", "sites"}, {"mass"}, {"running_avg_msd", "sites^2"}});
        t.seeds = {c.seeds[s]};
        std::vector<double> ft, fr;
        for (std::size_t i = 0; i < r.times.size(); ++i) {
            t.add_row({r.times[i], r.msd[i], std::sqrt(r.msd[i]), r.mass[i], r.running_time_avg_msd[i]});
            const bool in = c.fit_end <= 0.0 || (r.times[i] >= c.fit_start && r.times[i] <= c.fit_end);
            if (in && r.msd[i] > 0.0) {
                ft.push_back(r.times[i]);
                fr.push_back(std::sqrt(r.msd[i]));
            }
        }
        ctx.write("figure1_seed" + std::to_string(c.seeds[s]) + ".csv", t);
        const LineFit fit = ft.size() >= 2 ? loglog_fit(ft, fr) : LineFit{std::nan(""), std::nan(""), 0.0};
        betas.push_back(fit.slope);
        fits.add_row({static_cast<long long>(c.seeds[s]), fit.slope, std::exp(fit.intercept),
                      static_cast<long long>(r.wraparound_warning), r.max_mass_drift});
    }
    fits.seeds = c.seeds;
    ctx.write("figure1_fit.csv", fits);
    ctx.metric("median_beta", median_of(betas));
}

void run_kinetic(RunContext& ctx) {
    const Cfg& c = ctx.cfg;
    const TorusGrid g = grid_of(c);
    const std::vector<double> times = c.time_grid();
    ResultTable t({{"t", "time"}, {"seed"}, {"deviation"}});
    t.seeds = c.seeds;
    std::vector<double> med;
    ctx.stage("deviation", [&] {
        std::vector<std::vector<double>> dev(times.size(), std::vector<double>(c.seeds.size()));
        for (std::size_t s = 0; s < c.seeds.size(); ++s) {
            const HamiltonianSpec spec = make_hamiltonian(g, c.lambda, c.seeds[s]);
            for (std::size_t i = 0; i < times.size(); ++i) dev[i][s] = propagator_deviation(spec, times[i], c.tol);
        }
        for (std::size_t i = 0; i < times.size(); ++i) {
            for (std::size_t s = 0; s < c.seeds.size(); ++s)
                t.add_row({times[i], static_cast<long long>(c.seeds[s]), dev[i][s]});
            med.push_back(median_of(dev[i]));
        }
    });
    ctx.write("kinetic.csv", t);
    ResultTable m(std::vector<Column>{{"t", "time"}, {"median_deviation"}});
    for (std::size_t i = 0; i < times.size(); ++i) m.add_row({times[i], med[i]});
    ctx.write("kinetic_median.csv", m);
    if (times.size() >= 2) ctx.metric("slope", loglog_fit(times, med).slope);
}

void run_projection(RunContext& ctx) {
    const Cfg& c = ctx.cfg;
    const TorusGrid g = grid_of(c);
    ResultTable t({{"delta", "energy"}, {"seed"}, {"deviation"}});
    t.seeds = c.seeds;
    std::vector<std::vector<double>> dev(c.deltas.size(), std::vector<double>(c.seeds.size()));
    ctx.stage("diagonalize", [&] {
        for (std::size_t s = 0; s < c.seeds.size(); ++s) {
            const EigenDecomposition dec = dense_diagonalize(make_hamiltonian(g, c.lambda, c.seeds[s]));
            for (std::size_t i = 0; i < c.deltas.size(); ++i) dev[i][s] = projection_deviation(g, dec, c.E, c.deltas[i]);
        }
    });
    std::vector<double> med;
    for (std::size_t i = 0; i < c.deltas.size(); ++i) {
        for (std::size_t s = 0; s < c.seeds.size(); ++s)
            t.add_row({c.deltas[i], static_cast<long long>(c.seeds[s]), dev[i][s]});
        med.push_back(median_of(dev[i]));
    }
    ctx.write("projection.csv", t);
    if (c.deltas.size() >= 2) ctx.metric("slope", loglog_fit(c.deltas, med).slope);
}

void run_lpq(RunContext& ctx) {
    const Cfg& c = ctx.cfg;
    const TorusGrid g = grid_of(c);
    const NormMode mode = c.norm_mode == "exact" ? NormMode::Exact : NormMode::Sampled;
    ResultTable t({{"p"}, {"q"}, {"eta", "energy"}, {"value"}, {"mode", "label"}, {"n_sample"}, {"seed"}}, true);
    t.seeds = c.seeds;
    ctx.stage("norms", [&] {
        for (double eta : etas_or_eta(c)) {
            std::vector<double> vals;
            for (std::uint64_t seed : c.seeds) {
                const NormEstimate est =
                    lpq_norm(make_hamiltonian(g, c.lambda, seed), cplx(c.E, eta), c.p, c.q, mode, c.n_samples, c.seed);
                t.add_row({c.p, c.q, eta, est.value, std::string(est.exact ? "exact" : "sampled"),
                           static_cast<long long>(est.n_sample), static_cast<long long>(seed)});
                vals.push_back(est.value);
            }
            ctx.metric("median_norm_eta_" + short_label(eta), median_of(vals));
        }
    });
    ctx.write("lpq.csv", t);
}

void run_tk(RunContext& ctx) {
    const Cfg& c = ctx.cfg;
    const HamiltonianSpec spec = make_hamiltonian(grid_of(c), c.lambda, c.seeds.front());
    ResultTable t({{"k"}, {"s", "time"}, {"t", "time"}, {"residual"}});
    t.seeds = {c.seeds.front()};
    double worst = 0.0;
    ctx.stage("decomposition", [&] {
        for (double s : c.time_grid())
            for (int k = 1; k <= 3; ++k) {
                const double r = decomposition_residual(spec, k, s, s, c.quad_nodes);
                worst = std::max(worst, r);
                t.add_row({static_cast<long long>(k), s, s, r});
            }
    });
    ctx.write("tk_residuals.csv", t);
    ctx.metric("max_residual", worst);
}

void run_goe(RunContext& ctx) {
    const Cfg& c = ctx.cfg;
    std::vector<LocalLawReport> reps;
    ctx.stage("local_law", [&] { reps = goe_local_law(c.N, energies_or_E(c), c.eta, c.n_samples, c.seed); });
    ResultTable t({{"N"}, {"E", "energy"}, {"eta", "energy"}, {"mean_im_m"}, {"sd_im_m"}, {"reference_im_m"},
                   {"semicircle_im_m"}, {"quadratic_residual"}, {"below_proven_scale"}});
    for (const auto& r : reps)
        t.add_row({static_cast<long long>(r.N), r.E, r.eta, r.mean_im, r.sd_im, r.reference_im, r.semicircle.imag(),
                   r.quadratic_residual, static_cast<long long>(r.below_proven_scale)});
    ctx.write("goe_local_law.csv", t);
    for (const auto& r : reps) ctx.metric("abs_error_E_" + format_number(r.E), std::abs(r.mean_im - r.reference_im));
}

void run_nck(RunContext& ctx) {
    const Cfg& c = ctx.cfg;
    std::vector<std::pair<std::string, GaussianSeriesEnsemble>> ens;
    if (c.ensemble != "goe") ens.emplace_back("diagonal", diagonal_ensemble(c.N));
    if (c.ensemble != "diagonal") ens.emplace_back("goe", goe_ensemble(c.N));
    ResultTable norms({{"ensemble", "label"}, {"sample"}, {"norm"}});
    ResultTable sum({{"ensemble", "label"}, {"n"}, {"sigma"}, {"alpha"}, {"threshold"}, {"mean_norm"}, {"exceedance"}});
    for (const auto& [name, e] : ens) {
        NCKReport r;
        ctx.stage("nck_" + name, [&] { r = nck_check(e, c.n_samples, c.alpha, c.seed); });
        for (std::size_t i = 0; i < r.norms.size(); ++i) norms.add_row({name, static_cast<long long>(i), r.norms[i]});
        sum.add_row({name, static_cast<long long>(r.n), r.sigma, r.alpha, r.threshold, r.mean_norm, r.exceedance});
        ctx.metric("exceedance_" + name, r.exceedance);
    }
    ctx.write("nck_norms.csv", norms);
    ctx.write("nck_summary.csv", sum);
}

void run_theta(RunContext& ctx) {
    const Cfg& c = ctx.cfg;
    const auto Es = energies_or_E(c);
    const auto etas = etas_or_eta(c);
    ResultTable t({{"E", "energy"}, {"eta", "energy"}, {"lambda"}, {"re_theta", "1/energy"}, {"im_theta", "1/energy"},
                   {"residual", "1/energy"}, {"iterations"}, {"resolution", "sites"}});
    double worst = 0.0;
    ctx.stage("solve_theta", [&] {
        std::vector<ThetaSolution> sol(Es.size() * etas.size());
        parallel_for(sol.size(), [&](std::size_t k) {
            sol[k] = solve_theta({Es[k / etas.size()], etas[k % etas.size()], c.lambda}, c.d, c.resolution);
        });
        for (std::size_t k = 0; k < sol.size(); ++k) {
            const auto& s = sol[k];
            worst = std::max(worst, s.residual);
            t.add_row({Es[k / etas.size()], etas[k % etas.size()], c.lambda, s.theta.real(), s.theta.imag(), s.residual,
                       static_cast<long long>(s.iterations), static_cast<long long>(s.resolution)});
        }
    });
    ctx.write("theta.csv", t);
    ResultTable dt({{"E", "energy"}, {"rho", "1/energy"}, {"eta", "energy"}, {"converged"}});
    ctx.stage("dos", [&] {
        std::vector<double> inside;
        for (double E : Es)
            if (std::abs(E) <= 2.0 * c.d + 1.0) inside.push_back(E);
        for (const auto& e : dos_table(inside, c.d).entries)
            dt.add_row({e.E, e.rho, e.eta, static_cast<long long>(e.converged)});
    });
    ctx.write("dos.csv", dt);
    ctx.metric("max_residual", worst);
}

void run_kernel(RunContext& ctx) {
    const Cfg& c = ctx.cfg;
    const TorusGrid g = grid_of(c);
    ResultTable t({{"E", "energy"}, {"eta", "energy"}, {"lambda"}, {"mass"}, {"ward_mass"}, {"formula_mass"},
                   {"max_abs_mean", "sites"}, {"second_moment", "sites^2"}, {"fourth_moment", "sites^4"}});
    ctx.stage("kernel", [&] {
        for (double E : energies_or_E(c))
            for (double eta : etas_or_eta(c)) {
                const EnergyPoint pt{E, eta, c.lambda};
                const ThetaSolution th = solve_theta(pt, c.d, c.resolution);
                const KernelField k = kernel_K(pt, th.theta, g);
                const double l2ImT = c.lambda * c.lambda * th.theta.imag();
                const double ward = l2ImT / (l2ImT + eta);
                const double formula = 1.0 - eta / l2ImT;
                t.add_row({E, eta, c.lambda, k.mass, ward, formula, k.mean.cwiseAbs().maxCoeff(), k.second_moment,
                           k.fourth_moment});
            }
    });
    ctx.write("kernel_moments.csv", t);
}

void run_tequation(RunContext& ctx) {
    const Cfg& c = ctx.cfg;
    const TorusGrid g = grid_of(c);
    const EnergyPoint pt{c.E, c.eta, c.lambda};
    const double r = c.radius_scale * c.lambda / std::sqrt(c.eta);
    const RealField f = ball_indicator(g, r);
    double predicted = 0.0;
    ThetaSolution th;
    ctx.stage("predict", [&] {
        th = solve_theta(pt, c.d, c.resolution);
        const KernelField k = kernel_K(pt, th.theta, g);
        predicted = predict_observable(k, f).values(0);
    });
    const double pred_norm = predicted * c.eta / th.theta.imag();
    ResultTable t({{"seed"}, {"observable"}, {"im_R00"}, {"normalized"}, {"ward_residual"}});
    t.seeds = c.seeds;
    std::vector<double> norm(c.seeds.size());
    ctx.stage("measure", [&] {
        std::vector<ObservableSample> obs(c.seeds.size());
        parallel_for(c.seeds.size(), [&](std::size_t s) {
            obs[s] = measure_observable_single(make_hamiltonian(g, c.lambda, c.seeds[s]), pt.z(), f);
        });
        for (std::size_t s = 0; s < obs.size(); ++s) {
            norm[s] = obs[s].observable * c.eta / obs[s].R00.imag();
            t.add_row({static_cast<long long>(c.seeds[s]), obs[s].observable, obs[s].R00.imag(), norm[s],
                       obs[s].ward_residual});
        }
    });
    ctx.write("tequation.csv", t);
    ctx.metric("radius", r);
    ctx.metric("predicted", predicted);
    ctx.metric("predicted_normalized", pred_norm);
    ctx.metric("median_normalized", median_of(norm));
    ctx.metric("ratio", median_of(norm) / pred_norm);
}

void run_anticonc(RunContext& ctx) {
    const Cfg& c = ctx.cfg;
    const EnergyPoint pt{c.E, c.eta, c.lambda};
    KernelField k;
    ctx.stage("kernel", [&] {
        const ThetaSolution th = solve_theta(pt, c.d, c.resolution);
        k = kernel_K(pt, th.theta, TorusGrid(c.d, c.kernel_L));
    });
    const StepKernel steps(k);
    const double r = c.walk_radius > 0.0 ? c.walk_radius : steps.sigma();
    std::vector<AnticoncentrationPoint> pts;
    ctx.stage("walk", [&] {
        pts = anticoncentration_mc(steps, c.checkpoints, std::vector<int>(c.d, 0), r,
                                   static_cast<std::uint64_t>(c.n_trials), c.seed);
    });
    ResultTable t({{"N", "steps"}, {"hits"}, {"trials"}, {"probability"}, {"wilson_lo"}, {"wilson_hi"}});
    std::vector<double> xs, ys;
    for (const auto& p : pts) {
        t.add_row({static_cast<long long>(p.N), static_cast<long long>(p.hits), static_cast<long long>(p.trials),
                   p.probability, p.wilson.lo, p.wilson.hi});
        if (p.hits > 0) {
            xs.push_back(p.N);
            ys.push_back(p.probability);
        }
    }
    ctx.write("anticoncentration.csv", t);
    ctx.metric("sigma", steps.sigma());
    ctx.metric("radius", r);
    if (xs.size() >= 2) ctx.metric("slope", loglog_fit(xs, ys).slope);
    ctx.stage("neumann", [&] {
        const double green = predict_observable(k, ball_indicator(k.grid, r)).values(0);
        const MeanEstimate mc = neumann_walk_mc(k, r, static_cast<std::uint64_t>(c.n_trials), c.seed);
        ctx.metric("neumann_green", green);
        ctx.metric("neumann_mc", mc.mean);
        ctx.metric("neumann_mc_se", mc.standard_error);
        ctx.metric("neumann_z", (mc.mean - green) / mc.standard_error);
    });
}

void run_deloc(RunContext& ctx) {
    const Cfg& c = ctx.cfg;
    DelocReport rep;
    ctx.stage("deloc", [&] { rep = deloc_check(grid_of(c), c.lambda, cplx(c.E, c.eta), c.c1, c.seeds); });
    ResultTable t({{"seed"}, {"exterior_fraction"}});
    t.seeds = c.seeds;
    for (std::size_t s = 0; s < c.seeds.size(); ++s)
        t.add_row({static_cast<long long>(rep.fraction.seeds[s]), rep.fraction.values[s]});
    ctx.write("deloc.csv", t);
    ctx.metric("radius", rep.radius);
    ctx.metric("lower_quartile", rep.fraction.lower_quartile);
    ctx.metric("median", rep.fraction.median);
    ctx.metric("upper_quartile", rep.fraction.upper_quartile);
}

void run_inequalities(RunContext& ctx) {
    const Cfg& c = ctx.cfg;
    InequalityReport rep;
    ctx.stage("suite", [&] { rep = matrix_inequality_suite(c.matrix_size, static_cast<int>(c.n_trials), c.seed); });
    ResultTable t({{"inequality", "label"}, {"trial"}, {"parameter"}, {"lhs"}, {"rhs"}});
    for (const auto& v : rep.violations)
        t.add_row({v.inequality, static_cast<long long>(v.trial), v.parameter, v.sides.lhs, v.sides.rhs});
    ctx.write("inequality_violations.csv", t);
    ctx.metric("checks", static_cast<double>(rep.checks));
    ctx.metric("violations", static_cast<double>(rep.violations.size()));
    ctx.metric("max_relative_excess", rep.max_relative_excess);
}

struct Entry {
    ExperimentInfo info;
    std::function<void(RunContext&)> run;
};

const std::vector<Entry>& entries() {
    static const std::vector<Entry> e = {
        {{"figure1", "mean-square displacement r(t) of delta_0 and its growth exponent"}, run_figure1},
        {{"kinetic", "||e^{-itH} - e^{-itDelta}|| against t"}, run_kinetic},
        {{"projection", "||chi(H) - chi(Delta)|| against the window width delta"}, run_projection},
        {{"lpq", "mixed norms ||R(z)||_{p->q} across eta"}, run_lpq},
        {{"tk", "Dyson collision-operator decomposition residuals"}, run_tk},
        {{"goe", "GOE local law: N^{-1} tr R against the semicircle"}, run_goe},
        {{"nck", "non-commutative Khintchine exceedance for diagonal and GOE series"}, run_nck},
        {{"theta", "self-consistent theta(z) over an (E, eta) grid, plus the density of states"}, run_theta},
        {{"kernel", "kernel K~ mass and moments"}, run_kernel},
        {{"tequation", "T-equation prediction against simulated O[f]"}, run_tequation},
        {{"anticonc", "anticoncentration of the kernel-driven walk and Neumann/walk equivalence"}, run_anticonc},
        {{"deloc", "exterior mass fraction of resolvent columns"}, run_deloc},
        {{"inequalities", "trace, Jensen and Hoelder matrix inequalities"}, run_inequalities},
    };
    return e;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() {
    static const std::vector<ExperimentInfo> reg = [] {
        std::vector<ExperimentInfo> r;
        for (const auto& e : entries()) r.push_back(e.info);
        return r;
    }();
    return reg;
}

void experiment_preconditions(const Cfg& c, std::vector<std::string>& e) {
    auto check = [&e](bool ok, const std::string& key, const std::string& rule) {
        if (!ok) e.push_back(key + ": " + rule);
    };
    const double sites = std::pow(static_cast<double>(c.L), c.d);
    const std::string& n = c.name;
    if (n == "figure1" || n == "kinetic" || n == "tk")
        check(!c.time_grid().empty(), "time.times", n + " needs times, or dt > 0 and t_max >= dt");
    if (n == "figure1" || n == "kinetic")
        check(c.tol > 1e-14 && c.tol < 1e-4, "numerics.tol", "1e-14 < tol < 1e-4");
    if (n == "projection") {
        check(!c.deltas.empty(), "spectral.deltas", "at least one delta");
        check(sites <= 4096, "lattice.L", "L^d <= 4096 (dense diagonalisation)");
    }
    if (n == "lpq") {
        const bool ok_pair = (c.p == 1.0 || c.p == 2.0) && (c.q == 2.0 || c.q == 4.0 || c.q == 6.0 || std::isinf(c.q));
        check(ok_pair, "spectral.q", "(p, q) supported");
        if (c.norm_mode == "exact") check(sites <= 4096, "lattice.L", "L^d <= 4096 for norm_mode = exact");
    }
    if (n == "tk") check(sites <= 64, "lattice.L", "L^d <= 64 (dense collision operators)");
    if (n == "goe") check(c.N <= 4000, "rmt.N", "N <= 4000");
    if (n == "nck") check(c.N >= 4 && c.N <= 4000, "rmt.N", "4 <= N <= 4000");
    if (n == "kernel" || n == "tequation" || n == "deloc") check(sites <= (1 << 22), "lattice.L", "L^d <= 2^22");
    if (n == "tequation" || n == "deloc") check(sites <= 262144, "lattice.L", "L^d <= 262144 (sparse LU)");
    if (n == "anticonc") {
        check(c.lambda > 0.0, "lattice.lambda", "lambda > 0");
        check(!c.checkpoints.empty(), "walk.checkpoints", "at least one checkpoint");
        check(std::pow(static_cast<double>(c.kernel_L), c.d) <= (1 << 22), "walk.kernel_L", "kernel_L^d <= 2^22");
    }
    if (n == "deloc" && c.lambda > 0.0 && c.eta > 0.0) {
        const double l2 = c.lambda * c.lambda;
        check(c.eta >= 0.5 * l2 && c.eta <= 2.0 * l2, "spectral.eta", "lambda^2/2 <= eta <= 2 lambda^2");
        check(c.L >= 10.0 * c.lambda / std::sqrt(c.eta), "lattice.L", "L >= 10 lambda eta^{-1/2}");
    }
    if (n == "deloc") check(c.lambda > 0.0, "lattice.lambda", "lambda > 0");
}

RunManifest run_experiment(const Cfg& cfg) {
    if (auto errors = validate_config(cfg); !errors.empty()) throw ConfigError(std::move(errors));
    const auto& reg = entries();
    const auto it = std::find_if(reg.begin(), reg.end(), [&](const Entry& e) { return e.info.name == cfg.name; });
    RunContext ctx(cfg);
    try {
        it->run(ctx);
    } catch (...) {
        ctx.finish();
        throw;
    }
    ctx.finish();
    return ctx.manifest;
}

std::string manifest_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["config_hash"] = m.config_hash;
    j["version"] = m.version;
    j["files"] = nlohmann::ordered_json::array();
    for (const auto& f : m.files)
        j["files"].push_back({{"path", f.path}, {"rows", f.rows}, {"seeds", f.seeds}});
    j["timings"] = nlohmann::ordered_json::object();
    for (const auto& t : m.timings) j["timings"][t.stage] = t.seconds;
    if (!m.failed_stage.empty()) {
        j["failed_stage"] = m.failed_stage;
        j["error"] = m.error;
    }
    return j.dump(2) + "\n";
}

}  // namespace qdiff::harness
