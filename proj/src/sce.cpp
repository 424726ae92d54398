#include "qdiff/sce.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "qdiff/parallel.hpp"
#include "qdiff/rng.hpp"
#include "qdiff/spectral.hpp"

namespace qdiff {

namespace {

constexpr double kPi = std::numbers::pi;

// Distinct values of 2 cos(2 pi k / M) with multiplicities / M.
std::vector<std::pair<double, double>> axis_levels(int M) {
    std::vector<std::pair<double, double>> out;
    for (int k = 0; k <= M / 2; ++k) {
        const int mult = (k == 0 || 2 * k == M) ? 1 : 2;
        out.emplace_back(2.0 * std::cos(2.0 * kPi * k / M), static_cast<double>(mult) / M);
    }
    return out;
}

// Levels of the dispersion over the (d-1)-dimensional transverse grid.
std::vector<std::pair<double, double>> transverse_levels(int d, int M) {
    std::vector<std::pair<double, double>> levels{{0.0, 1.0}};
    const auto axis = axis_levels(M);
    for (int a = 1; a < d; ++a) {
        std::vector<std::pair<double, double>> next;
        next.reserve(levels.size() * axis.size());
        for (const auto& [w, p] : levels)
            for (const auto& [v, q] : axis) next.emplace_back(w + v, p * q);
        levels.swap(next);
    }
    return levels;
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Eigen::VectorXcd kernel_spectrum(const KernelField& kernel) {
    Eigen::VectorXcd k = kernel.values.cast<cplx>();
    fft_inplace(kernel.grid, k, false);
    return k * std::sqrt(static_cast<double>(kernel.grid.size()));
}

Eigen::VectorXd convolve_spectrum(const TorusGrid& grid, const Eigen::VectorXcd& khat, const Eigen::VectorXd& f,
                                  bool nonnegative) {
    Eigen::VectorXcd v = f.cast<cplx>();
    fft_inplace(grid, v, false);
    v = v.cwiseProduct(khat);
    fft_inplace(grid, v, true);
    Eigen::VectorXd out = v.real();
    // exact result is >= 0; drop FFT round-off below zero
    if (nonnegative) out = out.cwiseMax(0.0);
    return out;
}

void require_eta(double eta) { require(eta > 0.0, "eta > 0"); }

}  // namespace

// ---------------------------------------------------------------- F(z)

cplx ring_green(cplx w, int M) {
    require(M >= 2, "ring_green: M >= 2");
    // rho + 1/rho = w with |rho| < 1; G_M = (1 + rho^M) / ((rho - 1/rho)(1 - rho^M))
    const cplx s = std::sqrt(w - 2.0) * std::sqrt(w + 2.0);
    cplx big = 0.5 * (w + s);
    if (std::abs(0.5 * (w - s)) > std::abs(big)) big = 0.5 * (w - s);
    const cplx rho = 1.0 / big;
    const cplx rM = std::exp(static_cast<double>(M) * std::log(rho));
    return (1.0 + rM) / ((rho - big) * (1.0 - rM));
}

cplx F_torus(cplx z, int d, int M) {
    require(d >= 1, "d >= 1");
    cplx acc = 0.0;
    for (const auto& [w, p] : transverse_levels(d, M)) acc += p * ring_green(z - w, M);
    return acc;
}

int default_resolution(double eta) {
    require_eta(eta);
    const int M = static_cast<int>(std::ceil(std::max(64.0, 64.0 / eta)));
    return M + (M % 2);
}

cplx F_eval(cplx z, int d, int M) {
    require_eta(z.imag());
    if (M == 0) M = default_resolution(z.imag());
    require(M >= 2, "resolution >= 2");
    const cplx F = F_torus(z, d, M);
    if (M < 8.0 * std::max(1.0, 1.0 / z.imag())) {
        const double change = std::abs(F_torus(z, d, 2 * M) - F);
        if (change > 1e-8)
            throw NumericalError("F_eval: resolution " + std::to_string(M) + " insufficient (doubling change " +
                                 std::to_string(change) + ")");
    }
    return F;
}

cplx F_eval_direct(cplx z, int d, int M) {
    const TorusGrid g(d, M);
    const Eigen::VectorXd w = dispersion_table(g);
    cplx acc = 0.0;
    for (Index i = 0; i < w.size(); ++i) acc += 1.0 / (w(i) - z);
    return acc / static_cast<double>(g.size());
}

cplx F_closed_form_1d(cplx z) {
    cplx F = -1.0 / (std::sqrt(z - 2.0) * std::sqrt(z + 2.0));
    if (F.imag() < 0.0) F = -F;
    return F;
}

double dos_closed_form_2d(double E) {
    if (std::abs(E) >= 4.0) return 0.0;
    return std::comp_ellint_1(std::sqrt(1.0 - E * E / 16.0)) / (2.0 * kPi * kPi);
}

DOSEntry dos(double E, int d, const std::vector<double>& eta_sequence) {
    require(std::abs(E) <= 2.0 * d + 1.0, "E in [-2d-1, 2d+1]");
    std::vector<double> etas = eta_sequence;
    if (etas.empty())
        for (int k = 0; k < 5; ++k) etas.push_back(0.1 / (1 << k));
    for (double e : etas) require_eta(e);
    const std::size_t n = etas.size();
    // Neville tableau at eta = 0
    std::vector<double> P(n);
    for (std::size_t i = 0; i < n; ++i) P[i] = F_eval({E, etas[i]}, d).imag() / kPi;
    double previous = P[n - 1];
    double best = P[n - 1];
    for (std::size_t m = 1; m < n; ++m) {
        for (std::size_t i = 0; i + m < n; ++i)
            P[i] = (etas[i + m] * P[i] - etas[i] * P[i + 1]) / (etas[i + m] - etas[i]);
        previous = best;
        best = P[0];
    }
    DOSEntry out;
    out.E = E;
    out.rho = std::max(0.0, best);
    out.eta = *std::min_element(etas.begin(), etas.end());
    out.converged = n >= 2 && std::abs(best - previous) <= 1e-6 * std::max(1.0, std::abs(best));
    return out;
}

DOSTable dos_table(const std::vector<double>& energies, int d, const std::vector<double>& eta_sequence) {
    DOSTable t;
    t.entries.resize(energies.size());
    parallel_for(energies.size(), [&](std::size_t i) { t.entries[i] = dos(energies[i], d, eta_sequence); });
    return t;
}

// ---------------------------------------------------------------- theta

ThetaSolution solve_theta(const EnergyPoint& point, int d, int resolution) {
    require_eta(point.eta);
    const int M = resolution ? resolution : default_resolution(point.eta);
    const cplx z = point.z();
    const double l2 = point.lambda * point.lambda;
    auto map = [&](cplx th) { return F_eval(z + l2 * th, d, M); };

    ThetaSolution out;
    out.resolution = M;
    cplx theta = F_eval(z, d, M);
    if (l2 == 0.0) {
        out.theta = theta;
        out.iterations = 1;
        return out;
    }
    const int max_iter = 5000;
    double res = std::abs(theta - map(theta));
    double best = res;
    int since_best = 0;
    int it = 0;
    while (res > 1e-13 && it < max_iter && since_best < 50) {
        theta = 0.5 * theta + 0.5 * map(theta);
        res = std::abs(theta - map(theta));
        ++it;
        if (res < 0.5 * best) {
            best = res;
            since_best = 0;
        } else {
            ++since_best;
        }
    }
    // damped map stalled: Newton on theta - F(z + lambda^2 theta)
    for (int k = 0; res > 1e-13 && k < 50; ++k, ++it) {
        const cplx w = z + l2 * theta;
        const double h = 1e-4 * w.imag();
        const cplx dF = (F_eval(w + h, d, M) - F_eval(w - h, d, M)) / (2.0 * h);
        theta -= (theta - F_eval(w, d, M)) / (1.0 - l2 * dF);
        res = std::abs(theta - map(theta));
    }
    out.theta = theta;
    out.residual = res;
    out.iterations = it;
    if (!(theta.imag() > 0.0)) throw NumericalError("solve_theta: Im theta <= 0 (resolution failure)");
    if (!(res <= 1e-12))
        throw NumericalError("solve_theta: no convergence, residual " + std::to_string(res));
    return out;
}

// ---------------------------------------------------------------- kernel

ComplexField mtilde_kernel(const EnergyPoint& point, cplx theta, const TorusGrid& grid) {
    const cplx w = point.z() + point.lambda * point.lambda * theta;
    require(w.imag() > 0.0, "Im(z + lambda^2 theta) > 0");
    const Eigen::VectorXd om = dispersion_table(grid);
    Eigen::VectorXcd m = (om.cast<cplx>().array() - w).inverse().matrix();
    fft_inplace(grid, m, true);
    return ComplexField(grid, m / std::sqrt(static_cast<double>(grid.size())));
}

KernelField kernel_K(const EnergyPoint& point, cplx theta, const TorusGrid& grid) {
    const ComplexField M = mtilde_kernel(point, theta, grid);
    KernelField k;
    k.grid = grid;
    k.lambda = point.lambda;
    const Eigen::VectorXd raw = M.values.cwiseAbs2();
    k.values.resize(grid.size());
    for (Index i = 0; i < grid.size(); ++i) k.values(i) = 0.5 * (raw(i) + raw(grid.difference(0, i)));

    const double l2 = point.lambda * point.lambda;
    k.mean = Eigen::VectorXd::Zero(grid.d);
    double s0 = 0.0, s2 = 0.0, s4 = 0.0;
    for (Index i = 0; i < grid.size(); ++i) {
        const auto x = grid.displacement(i);
        double r2 = 0.0;
        for (int a = 0; a < grid.d; ++a) {
            r2 += double(x[a]) * x[a];
            // the antipodal coordinate has no sign; it contributes nothing to odd moments
            if (2 * std::abs(x[a]) != grid.L) k.mean(a) += x[a] * k.values(i);
        }
        s0 += k.values(i);
        s2 += r2 * k.values(i);
        s4 += r2 * r2 * k.values(i);
    }
    k.mass = l2 * s0;
    k.mean *= l2;
    k.second_moment = l2 * s2;
    k.fourth_moment = l2 * s4;
    return k;
}

RealField convolve(const KernelField& kernel, const RealField& f) {
    require(f.grid == kernel.grid, "convolve: grid mismatch");
    const bool nonneg = f.values.size() == 0 || f.values.minCoeff() >= 0.0;
    return RealField(f.grid, convolve_spectrum(f.grid, kernel_spectrum(kernel), f.values, nonneg));
}

GreenResult green_apply(const KernelField& kernel, const RealField& f, double tol) {
    require(f.grid == kernel.grid, "green_apply: grid mismatch");
    require(tol > 0.0, "tol > 0");
    if (!(kernel.mass < 1.0)) throw ValidationError("green_apply: kernel mass >= 1, Green operator undefined");
    const double l2 = kernel.lambda * kernel.lambda;
    const Eigen::VectorXcd khat = kernel_spectrum(kernel) * l2;
    const bool nonneg = f.values.size() == 0 || f.values.minCoeff() >= 0.0;
    const double stop = tol * (1.0 - kernel.mass) * sup_norm(f.values);

    GreenResult out{RealField(f.grid, f.values), 0};
    Eigen::VectorXd term = f.values;
    const int max_terms = 10000000;
    while (sup_norm(term) > stop) {
        if (out.terms >= max_terms) throw NumericalError("green_apply: Neumann series did not converge");
        term = convolve_spectrum(f.grid, khat, term, nonneg);
        out.g.values += term;
        ++out.terms;
    }
    return out;
}

RealField predict_observable(const KernelField& kernel, const RealField& f, double tol) {
    return green_apply(kernel, convolve(kernel, f), tol).g;
}

RealField ball_indicator(const TorusGrid& grid, double r) {
    RealField f(grid);
    const double r2 = r * r * (1.0 + 1e-12);
    for (Index i = 0; i < grid.size(); ++i) f.values(i) = grid.dist2(i, 0) <= r2 ? 1.0 : 0.0;
    return f;
}

// ---------------------------------------------------------------- simulation

SeedStatistics summarize(std::vector<std::uint64_t> seeds, std::vector<double> values) {
    require(!values.empty() && seeds.size() == values.size(), "summarize: one value per seed");
    SeedStatistics s;
    s.median = median(values);
    s.lower_quartile = quantile(values, 0.25);
    s.upper_quartile = quantile(values, 0.75);
    s.seeds = std::move(seeds);
    s.values = std::move(values);
    return s;
}

ObservableSample measure_observable_single(const HamiltonianSpec& spec, cplx z, const RealField& f) {
    require(f.grid == spec.grid, "measure_observable: grid mismatch");
    const ResolventSolver solver(spec, z);
    const ResolventColumn col = solver.column(0);
    ObservableSample s;
    s.observable = f.values.dot(col.u.values.cwiseAbs2());
    s.R00 = col.u.values(0);
    s.ward_residual = ward_check(col.u, ResolventQuery{z.real(), z.imag(), 0});
    return s;
}

SeedStatistics measure_observable(const TorusGrid& grid, double lambda, cplx z, const RealField& f,
                                  const std::vector<std::uint64_t>& seeds) {
    require_eta(z.imag());
    std::vector<double> values(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        values[i] = measure_observable_single(make_hamiltonian(grid, lambda, seeds[i]), z, f).observable;
    });
    return summarize(seeds, std::move(values));
}

// ---------------------------------------------------------------- random walk

StepKernel::StepKernel(const KernelField& kernel) : d_(kernel.grid.d) {
    const TorusGrid& g = kernel.grid;
    for (Index i = 0; i < g.size(); ++i) {
        const double w = kernel.values(i);
        if (!(w > 0.0)) continue;
        // antipodal coordinates are split over both images so the step law stays even
        std::vector<std::vector<int>> images{g.displacement(i)};
        for (int a = 0; a < d_; ++a) {
            if (2 * std::abs(images[0][a]) != g.L) continue;
            const std::size_t n = images.size();
            for (std::size_t j = 0; j < n; ++j) {
                auto y = images[j];
                y[a] = -y[a];
                images.push_back(std::move(y));
            }
        }
        for (auto& y : images) {
            steps_.push_back(std::move(y));
            prob_.push_back(w / static_cast<double>(images.size()));
        }
    }
    require(!steps_.empty(), "StepKernel: kernel has no mass");
    build_alias();
}

StepKernel::StepKernel(int d, std::vector<std::vector<int>> steps, std::vector<double> weights)
    : d_(d), steps_(std::move(steps)), prob_(std::move(weights)) {
    require(!steps_.empty() && steps_.size() == prob_.size(), "StepKernel: one weight per step");
    for (const auto& s : steps_) require(static_cast<int>(s.size()) == d_, "StepKernel: step dimension");
    for (double p : prob_) require(p >= 0.0 && std::isfinite(p), "StepKernel: weights must be finite and >= 0");
    build_alias();
}

void StepKernel::build_alias() {
    const double total = std::accumulate(prob_.begin(), prob_.end(), 0.0);
    require(total > 0.0, "StepKernel: non-normalisable kernel");
    for (double& p : prob_) p /= total;
    const std::size_t n = prob_.size();
    alias_prob_.assign(n, 1.0);
    alias_.resize(n);
    std::iota(alias_.begin(), alias_.end(), std::size_t{0});
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
        scaled[i] = prob_[i] * static_cast<double>(n);
        (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
        const std::size_t s = small.back();
        small.pop_back();
        const std::size_t l = large.back();
        alias_prob_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] -= 1.0 - scaled[s];
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
}

double StepKernel::sigma() const {
    double s = 0.0;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        double r2 = 0.0;
        for (int v : steps_[i]) r2 += double(v) * v;
        s += prob_[i] * r2;
    }
    return std::sqrt(s);
}

std::size_t StepKernel::sample(double u1, double u2) const {
    const std::size_t i = std::min(steps_.size() - 1, static_cast<std::size_t>(u1 * steps_.size()));
    return u2 < alias_prob_[i] ? i : alias_[i];
}

namespace {

// Splits n_trials into fixed blocks so the reduction order is independent of scheduling.
template <class Body>
void for_trial_blocks(std::uint64_t n_trials, Body body) {
    const std::uint64_t block = 4096;
    const std::size_t n_blocks = static_cast<std::size_t>((n_trials + block - 1) / block);
    parallel_for(n_blocks, [&](std::size_t b) {
        const std::uint64_t lo = b * block;
        body(b, lo, std::min(n_trials, lo + block));
    });
}

}  // namespace

std::vector<AnticoncentrationPoint> anticoncentration_mc(const StepKernel& kernel, const std::vector<int>& checkpoints,
                                                         const std::vector<int>& y, double r, std::uint64_t n_trials,
                                                         std::uint64_t seed) {
    const int d = kernel.dimension();
    require(static_cast<int>(y.size()) == d, "anticoncentration_mc: target dimension");
    require(!checkpoints.empty() && n_trials > 0, "anticoncentration_mc: need checkpoints and trials");
    std::vector<int> cps = checkpoints;
    std::sort(cps.begin(), cps.end());
    require(cps.front() >= 1, "anticoncentration_mc: N >= 1");
    const double r2 = r * r * (1.0 + 1e-12);
    const std::size_t n_blocks = static_cast<std::size_t>((n_trials + 4095) / 4096);
    std::vector<std::vector<std::uint64_t>> hits(n_blocks, std::vector<std::uint64_t>(cps.size(), 0));
    const CounterRng master(seed, 0xA17C);

    for_trial_blocks(n_trials, [&](std::size_t b, std::uint64_t lo, std::uint64_t hi) {
        std::vector<long long> pos(d);
        for (std::uint64_t t = lo; t < hi; ++t) {
            RngStream rng(master.split(t));
            std::fill(pos.begin(), pos.end(), 0);
            int n = 0;
            for (std::size_t c = 0; c < cps.size(); ++c) {
                for (; n < cps[c]; ++n) {
                    const double u1 = rng.uniform();
                    const auto& s = kernel.step(kernel.sample(u1, rng.uniform()));
                    for (int a = 0; a < d; ++a) pos[a] += s[a];
                }
                double dist2 = 0.0;
                for (int a = 0; a < d; ++a) dist2 += double(pos[a] - y[a]) * double(pos[a] - y[a]);
                if (dist2 <= r2) ++hits[b][c];
            }
        }
    });

    std::vector<AnticoncentrationPoint> out(cps.size());
    for (std::size_t c = 0; c < cps.size(); ++c) {
        std::uint64_t k = 0;
        for (const auto& h : hits) k += h[c];
        out[c].N = cps[c];
        out[c].hits = k;
        out[c].trials = n_trials;
        out[c].probability = static_cast<double>(k) / static_cast<double>(n_trials);
        out[c].wilson = wilson_interval(k, n_trials);
    }
    return out;
}

double single_step_ball_probability(const StepKernel& kernel, const std::vector<int>& y, double r) {
    const double r2 = r * r * (1.0 + 1e-12);
    double p = 0.0;
    for (std::size_t i = 0; i < kernel.support_size(); ++i) {
        double dist2 = 0.0;
        for (int a = 0; a < kernel.dimension(); ++a) {
            const double dx = kernel.step(i)[a] - y[a];
            dist2 += dx * dx;
        }
        if (dist2 <= r2) p += kernel.probability(i);
    }
    return p;
}

MeanEstimate neumann_walk_mc(const KernelField& kernel, double r, std::uint64_t n_trials, std::uint64_t seed) {
    require(kernel.lambda > 0.0, "neumann_walk_mc: lambda > 0");
    require(kernel.mass > 0.0 && kernel.mass < 1.0, "neumann_walk_mc: kernel mass in (0, 1)");
    require(n_trials >= 2, "neumann_walk_mc: n_trials >= 2");
    const StepKernel steps(kernel);
    const TorusGrid& g = kernel.grid;
    const int d = g.d;
    const double r2 = r * r * (1.0 + 1e-12);
    const double l2 = kernel.lambda * kernel.lambda;
    const int j_max = static_cast<int>(std::ceil(std::log(1e-17) / std::log(kernel.mass)));
    const std::size_t n_blocks = static_cast<std::size_t>((n_trials + 4095) / 4096);
    std::vector<double> sum(n_blocks, 0.0), sum2(n_blocks, 0.0);
    const CounterRng master(seed, 0x9E0);

    for_trial_blocks(n_trials, [&](std::size_t b, std::uint64_t lo, std::uint64_t hi) {
        std::vector<int> pos(d);
        for (std::uint64_t t = lo; t < hi; ++t) {
            RngStream rng(master.split(t));
            std::fill(pos.begin(), pos.end(), 0);
            double weight = 1.0, acc = 0.0;
            for (int j = 1; j <= j_max; ++j) {
                const double u1 = rng.uniform();
                const auto& s = steps.step(steps.sample(u1, rng.uniform()));
                double dist2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    // torus position, distance by minimal image
                    pos[a] = ((pos[a] + s[a]) % g.L + g.L) % g.L;
                    const double m = g.min_image(pos[a]);
                    dist2 += m * m;
                }
                weight *= kernel.mass;
                if (dist2 <= r2) acc += weight;
            }
            acc /= l2;
            sum[b] += acc;
            sum2[b] += acc * acc;
        }
    });
    const double n = static_cast<double>(n_trials);
    const double s1 = std::accumulate(sum.begin(), sum.end(), 0.0);
    const double s2 = std::accumulate(sum2.begin(), sum2.end(), 0.0);
    MeanEstimate e;
    e.mean = s1 / n;
    const double var = std::max(0.0, (s2 - n * e.mean * e.mean) / (n - 1.0));
    e.standard_error = std::sqrt(var / n);
    return e;
}

// ---------------------------------------------------------------- delocalisation

DelocReport deloc_check(const TorusGrid& grid, double lambda, cplx z, double c1,
                        const std::vector<std::uint64_t>& seeds) {
    const double eta = z.imag();
    require_eta(eta);
    require(lambda > 0.0, "lambda > 0");
    require(c1 >= 0.0, "c1 >= 0");
    const double l2 = lambda * lambda;
    const double slack = 1e-12;
    require(eta >= 0.5 * l2 * (1 - slack) && eta <= 2.0 * l2 * (1 + slack), "lambda^2/2 <= eta <= 2 lambda^2");
    const double scale = lambda / std::sqrt(eta);
    require(grid.L >= 10.0 * scale, "L >= 10 lambda eta^{-1/2}");
    require(!seeds.empty(), "deloc_check: at least one seed");

    DelocReport rep;
    rep.radius = c1 * scale;
    const double r2 = rep.radius * rep.radius * (1.0 - 1e-12);
    std::vector<double> frac(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t s) {
        const ResolventSolver solver(make_hamiltonian(grid, lambda, seeds[s]), z);
        const ResolventColumn col = solver.column(0);
        double exterior = 0.0;
        for (Index i = 0; i < grid.size(); ++i)
            if (grid.dist2(i, 0) >= r2) exterior += std::norm(col.u.values(i));
        frac[s] = exterior / (col.u.values(0).imag() / eta);
    });
    rep.fraction = summarize(seeds, std::move(frac));
    return rep;
}

}  // namespace qdiff
