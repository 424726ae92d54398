// Acceptance runner: `qdiff_acceptance --criterion N` evaluates one criterion and
// prints a single "criterion N: PASS|FAIL ..." line. Exit status 0 on PASS.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qdiff/lattice.hpp"
#include "qdiff/numerics.hpp"
#include "qdiff/parallel.hpp"
#include "qdiff/propagation.hpp"
#include "qdiff/rng.hpp"
#include "qdiff/rmt.hpp"
#include "qdiff/sce.hpp"
#include "qdiff/spectral.hpp"

using namespace qdiff;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

class Detail {
public:
    template <class T>
    Detail& operator()(const std::string& key, T value) {
        out_ << (first_ ? "" : " ") << key << "=" << value;
        first_ = false;
        return *this;
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
    bool first_ = true;
};

std::vector<std::uint64_t> seed_list(int n) {
    std::vector<std::uint64_t> s(n);
    for (int i = 0; i < n; ++i) s[i] = i + 1;
    return s;
}

Eigen::VectorXcd random_vector(Index n, std::uint64_t seed) {
    RngStream r(seed, 3);
    Eigen::VectorXcd v(n);
    for (Index i = 0; i < n; ++i) v(i) = {r.gaussian(), r.gaussian()};
    return v;
}

// 1. Diffusive growth of r(t) at d = 2.
Verdict diffusive_growth() {
    const TorusGrid g(2, 512);
    const double lambda = 0.1;
    std::vector<double> times;
    for (double t = 100; t <= 2000; t += 100) times.push_back(t);
    const auto seeds = seed_list(4);
    std::vector<double> betas(seeds.size());
    std::vector<int> wrap(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t s) {
        const TrajectoryRecord rec =
            run_trajectory(make_hamiltonian(g, lambda, seeds[s]), ComplexField::delta(g, 0), times, 1e-8, 0);
        std::vector<double> ft, fr;
        for (std::size_t i = 0; i < times.size(); ++i)
            if (times[i] >= 500) {
                ft.push_back(times[i]);
                fr.push_back(std::sqrt(rec.msd[i]));
            }
        betas[s] = loglog_fit(ft, fr).slope;
        wrap[s] = rec.wraparound_warning;
    });
    const double beta = median(betas);
    return {beta >= 0.4 && beta <= 0.6,
            Detail()("median_beta", beta)("target", "[0.4,0.6]")("wraparound_seeds",
                                                                 std::count(wrap.begin(), wrap.end(), 1))
                .str()};
}

// 2. ||e^{-itH} - e^{-itDelta}|| grows like t^{1/2}.
Verdict kinetic_comparison() {
    const TorusGrid g(2, 64);
    const double lambda = 0.05;
    std::vector<double> times;
    for (double t = 2; t <= 0.1 / (lambda * lambda) + 1e-9; t += 2) times.push_back(t);
    const auto seeds = seed_list(16);
    std::vector<std::vector<double>> dev(times.size(), std::vector<double>(seeds.size()));
    parallel_for(seeds.size(), [&](std::size_t s) {
        const HamiltonianSpec h = make_hamiltonian(g, lambda, seeds[s]);
        for (std::size_t i = 0; i < times.size(); ++i) dev[i][s] = propagator_deviation(h, times[i], 1e-8);
    });
    std::vector<double> med;
    for (auto& d : dev) med.push_back(median(d));
    const double slope = loglog_fit(times, med).slope;
    return {std::abs(slope - 0.5) <= 0.15, Detail()("slope", slope)("target", "0.5+-0.15").str()};
}

// 3. Projection deviation against the window width.
Verdict projection_deviation_scaling() {
    const TorusGrid g(2, 48);
    const std::vector<double> deltas{0.5, 0.25, 0.125, 0.0625};
    const auto seeds = seed_list(8);
    std::vector<std::vector<double>> dev(deltas.size(), std::vector<double>(seeds.size()));
    parallel_for(seeds.size(), [&](std::size_t s) {
        const EigenDecomposition dec = dense_diagonalize(make_hamiltonian(g, 0.05, seeds[s]));
        for (std::size_t i = 0; i < deltas.size(); ++i) dev[i][s] = projection_deviation(g, dec, 1.0, deltas[i]);
    });
    std::vector<double> med;
    for (auto& d : dev) med.push_back(median(d));
    const double slope = loglog_fit(deltas, med).slope;
    return {std::abs(slope + 0.5) <= 0.2, Detail()("slope", slope)("target", "-0.5+-0.2").str()};
}

// 4. Exact identities.
Verdict exact_identities() {
    // Ward identity on every column of one realisation, plus a dense-regime sweep
    double ward = 0.0;
    {
        const HamiltonianSpec h = make_hamiltonian(TorusGrid(2, 64), 0.2, 5);
        const ResolventSolver solver(h, {1.0, 0.04});
        std::vector<double> r(h.grid.size());
        parallel_for(r.size(), [&](std::size_t y) {
            r[y] = ward_check(solver.column(static_cast<Index>(y)).u, {1.0, 0.04, static_cast<Index>(y)});
        });
        ward = *std::max_element(r.begin(), r.end());
        for (double E : {-2.5, 0.0, 1.0})
            for (double eta : {0.5, 0.05}) {
                const HamiltonianSpec s = make_hamiltonian(TorusGrid(1, 64), 0.5, 2);
                const ResolventSolver sv(s, {E, eta});
                for (Index y = 0; y < s.grid.size(); ++y) ward = std::max(ward, ward_check(sv.column(y).u, {E, eta, y}));
            }
    }
    double tk = 0.0;
    const HamiltonianSpec small = make_hamiltonian(TorusGrid(1, 8), 0.3, 1);
    for (int k = 1; k <= 3; ++k)
        for (auto [s, t] : {std::pair{1.0, 1.0}, {0.5, 1.5}, {2.0, 0.7}})
            tk = std::max(tk, decomposition_residual(small, k, s, t));
    double fft = 0.0;
    for (const TorusGrid& g : {TorusGrid(1, 1000), TorusGrid(2, 64), TorusGrid(3, 17)}) {
        const ComplexField f(g, random_vector(g.size(), g.L));
        fft = std::max(fft, (fft_inverse(fft_forward(f)).values - f.values).norm() / f.norm());
    }
    double hmat = 0.0;
    for (const TorusGrid& g : {TorusGrid(1, 256), TorusGrid(2, 16), TorusGrid(3, 6), TorusGrid(2, 3)}) {
        const HamiltonianSpec h = make_hamiltonian(g, 0.7, 4);
        const Eigen::VectorXcd v = random_vector(g.size(), 1);
        Eigen::VectorXcd Hv;
        apply_hamiltonian(h, v, Hv);
        hmat = std::max(hmat, (Hv - dense_hamiltonian(h).cast<cplx>() * v).norm() / v.norm());
    }
    const bool ok = ward <= 1e-8 && tk <= 1e-6 && fft <= 1e-12 && hmat <= 1e-12;
    return {ok, Detail()("max_ward", ward)("max_tk_residual", tk)("fft_roundtrip", fft)("dense_vs_matrix_free", hmat).str()};
}

// 5. GOE local law.
Verdict goe_local_law_check() {
    const auto reps = goe_local_law(4000, {0.0, 1.0, 3.0}, 0.05, 10, 1);
    bool ok = true;
    Detail d;
    for (const auto& r : reps) {
        if (std::abs(r.E) <= 2) {
            const double err = std::abs(r.mean_im - std::sqrt(1 - r.E * r.E / 4));
            ok = ok && err <= 0.05;
            d("abs_err_E" + std::to_string(static_cast<int>(r.E)), err);
        } else {
            ok = ok && r.mean_im <= 0.1;
            d("im_m_E" + std::to_string(static_cast<int>(r.E)), r.mean_im);
        }
    }
    return {ok, d.str()};
}

// 6. Non-commutative Khintchine exceedance and the matrix inequality suite.
Verdict nck_suite() {
    const NCKReport diag = nck_check(diagonal_ensemble(1024), 200, 4.0, 1);
    const NCKReport goe = nck_check(goe_ensemble(1024), 200, 4.0, 2);
    const InequalityReport ineq = matrix_inequality_suite(10, 1000, 3);
    const bool ok = diag.exceedance <= 0.01 && goe.exceedance <= 0.01 && ineq.violations.empty();
    return {ok, Detail()("diag_exceedance", diag.exceedance)("goe_exceedance", goe.exceedance)(
                    "inequality_checks", ineq.checks)("violations", ineq.violations.size())
                    .str()};
}

// 7. Self-consistent equation and kernel mass.
Verdict self_consistent_equation() {
    const double lambda = 0.2;
    std::vector<std::pair<double, double>> grid;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 10; ++j) grid.emplace_back(-3.5 + 7.0 * i / 19.0, 0.01 * std::pow(100.0, j / 9.0));
    std::vector<double> res(grid.size());
    std::vector<int> bad(grid.size());
    parallel_for(grid.size(), [&](std::size_t k) {
        try {
            const ThetaSolution s = solve_theta({grid[k].first, grid[k].second, lambda}, 2);
            res[k] = s.residual;
        } catch (const NumericalError&) {
            bad[k] = 1;
            res[k] = INFINITY;
        }
    });
    const double worst = *std::max_element(res.begin(), res.end());

    const EnergyPoint pt{1.0, 0.04, lambda};
    const cplx theta = solve_theta(pt, 2).theta;
    const KernelField k = kernel_K(pt, theta, TorusGrid(2, 1024));
    const double formula = 1.0 - pt.eta / (lambda * lambda * theta.imag());
    const double rel = std::abs(k.mass - formula) / std::abs(formula);
    const double mean = k.mean.cwiseAbs().maxCoeff();
    const bool ok = worst <= 1e-12 && rel <= 0.1 && mean <= 1e-12;
    return {ok, Detail()("max_residual", worst)("failed_points", std::count(bad.begin(), bad.end(), 1))(
                    "kernel_mass", k.mass)("formula_mass", formula)("relative_gap", rel)("max_abs_mean", mean)
                    .str()};
}

struct DiffusiveRegime {
    TorusGrid grid{2, 64};
    double lambda = 0.2;
    EnergyPoint point{1.0, 0.04, 0.2};
    std::vector<std::uint64_t> seeds = seed_list(32);
};

// 8. T-equation prediction against simulation.
Verdict tequation() {
    const DiffusiveRegime r;
    const double radius = 0.5 * r.lambda / std::sqrt(r.point.eta);
    const RealField f = ball_indicator(r.grid, radius);
    const cplx theta = solve_theta(r.point, 2).theta;
    const KernelField k = kernel_K(r.point, theta, r.grid);
    const double predicted = predict_observable(k, f).values(0) * r.point.eta / theta.imag();
    std::vector<double> norm(r.seeds.size());
    parallel_for(r.seeds.size(), [&](std::size_t s) {
        const ObservableSample o =
            measure_observable_single(make_hamiltonian(r.grid, r.lambda, r.seeds[s]), r.point.z(), f);
        norm[s] = o.observable * r.point.eta / o.R00.imag();
    });
    const double measured = median(norm);
    const double ratio = measured / predicted;
    return {ratio >= 1.0 / 3.0 && ratio <= 3.0,
            Detail()("median_measured", measured)("predicted", predicted)("ratio", ratio)("target", "[1/3,3]").str()};
}

// 9. Anticoncentration of the kernel-driven walk and Neumann/walk equivalence.
Verdict anticoncentration() {
    const EnergyPoint pt{1.0, 0.04, 0.2};
    const cplx theta = solve_theta(pt, 2).theta;
    const KernelField k = kernel_K(pt, theta, TorusGrid(2, 256));
    const StepKernel steps(k);
    const auto pts = anticoncentration_mc(steps, {16, 32, 64, 128, 256, 512, 1024}, {0, 0}, steps.sigma(), 200000, 1);
    std::vector<double> ns, ps;
    for (const auto& p : pts) {
        ns.push_back(p.N);
        ps.push_back(p.probability);
    }
    const double slope = loglog_fit(ns, ps).slope;

    const KernelField small = kernel_K(pt, theta, TorusGrid(2, 64));
    const double r = 3.0;
    const double green = predict_observable(small, ball_indicator(small.grid, r)).values(0);
    const MeanEstimate mc = neumann_walk_mc(small, r, 200000, 2);
    const double z = (mc.mean - green) / mc.standard_error;
    const bool ok = std::abs(slope + 1.0) <= 0.2 && std::abs(z) <= 3.0;
    return {ok, Detail()("slope", slope)("sigma", steps.sigma())("neumann", green)("walk", mc.mean)(
                    "walk_se", mc.standard_error)("z", z)
                    .str()};
}

// 10. Delocalisation: exterior mass fraction.
Verdict delocalisation() {
    const DiffusiveRegime r;
    const DelocReport rep = deloc_check(r.grid, r.lambda, r.point.z(), 0.5, r.seeds);
    return {rep.fraction.lower_quartile >= 0.2,
            Detail()("radius", rep.radius)("lower_quartile", rep.fraction.lower_quartile)("median",
                                                                                          rep.fraction.median)
                .str()};
}

// 11. Oracle equivalences.
Verdict oracles() {
    const HamiltonianSpec h = make_hamiltonian(TorusGrid(1, 8), 0.5, 7);
    const ComplexField psi(h.grid, random_vector(8, 1).normalized());
    const double ev = (evolve(h, psi, 2.0, 1e-12).values - dense_propagator(h, 2.0) * psi.values).norm();

    double fe = 0.0;
    for (cplx z : {cplx(0.5, 0.1), cplx(-1.7, 0.02), cplx(3.0, 0.5), cplx(0.0, 0.01)})
        fe = std::max(fe, std::abs(F_eval(z, 1) - F_closed_form_1d(z)));

    double sup = 0.0;
    for (int N = 1; N <= 8; ++N) {
        const Eigen::MatrixXcd B = random_vector(N * N, N).reshaped(N, N);
        sup = std::max(sup, (superoperator_goe(B) - superoperator_goe_bruteforce(B)).cwiseAbs().maxCoeff());
    }

    const IdentityCheck gibp = gibp_identity_check(anderson_ensemble(TorusGrid(1, 16), 0.3), {0.0, 0.2}, 10000, 1);
    const IdentityCheck cross = crossing_term_eval(goe_ensemble(16), {0.5, 0.5}, 100000, 2);
    const bool ok = ev <= 1e-9 && fe <= 1e-8 && sup <= 1e-12 && gibp.max_z <= 4.0 && cross.max_z <= 4.0;
    return {ok, Detail()("evolve_vs_dense", ev)("F_vs_closed_form", fe)("superoperator", sup)("gibp_max_z", gibp.max_z)(
                    "gibp_max_z_reduced", gibp.max_z_reduced)("crossing_max_z", cross.max_z)(
                    "crossing_max_z_reduced", cross.max_z_reduced)
                    .str()};
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<int, std::pair<std::string, std::function<Verdict()>>> criteria{
        {1, {"diffusive growth", diffusive_growth}},
        {2, {"kinetic comparison", kinetic_comparison}},
        {3, {"projection deviation", projection_deviation_scaling}},
        {4, {"exact identities", exact_identities}},
        {5, {"GOE local law", goe_local_law_check}},
        {6, {"NCK and matrix inequalities", nck_suite}},
        {7, {"self-consistent equation", self_consistent_equation}},
        {8, {"T-equation prediction", tequation}},
        {9, {"anticoncentration", anticoncentration}},
        {10, {"delocalisation", delocalisation}},
        {11, {"oracle equivalences", oracles}},
    };

    CLI::App app{"acceptance criteria"};
    int which = 0;
    app.add_option("--criterion", which, "criterion number (1-11); 0 runs all")->check(CLI::Range(0, 11));
    CLI11_PARSE(app, argc, argv);

    bool all_pass = true;
    for (const auto& [n, entry] : criteria) {
        if (which != 0 && n != which) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = entry.second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %d (%s): %s %s time=%.1fs\n", n, entry.first.c_str(), v.pass ? "PASS" : "FAIL",
                    v.detail.c_str(), secs);
        std::fflush(stdout);
        all_pass = all_pass && v.pass;
    }
    return all_pass ? 0 : 1;
}
