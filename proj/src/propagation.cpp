#include "qdiff/propagation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qdiff/numerics.hpp"

namespace qdiff {

namespace {

void require_dense(const TorusGrid& grid) {
    require(grid.size() <= kDenseRegimeSites, "dense regime requires L^d <= 4096");
}

// V in the momentum basis: (F V F^dagger)(xi, xi') = N^{-1/2} V_hat(xi - xi').
// Momentum indices share the site layout, so TorusGrid::difference gives xi - xi'.
Eigen::MatrixXcd potential_momentum(const HamiltonianSpec& spec) {
    const TorusGrid& g = spec.grid;
    const Index n = g.size();
    Eigen::VectorXcd vhat = spec.disorder.values.cast<cplx>();
    fft_inplace(g, vhat, false);
    vhat /= std::sqrt(static_cast<double>(n));
    Eigen::MatrixXcd M(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) M(i, j) = vhat(g.difference(i, j));
    return M;
}

// A_pos = F^dagger A_mom F.
Eigen::MatrixXcd to_position_basis(const TorusGrid& grid, Eigen::MatrixXcd A) {
    const Index n = grid.size();
    Eigen::VectorXcd v(n);
    for (Index j = 0; j < n; ++j) {
        v = A.col(j);
        fft_inplace(grid, v, true);
        A.col(j) = v;
    }
    for (Index i = 0; i < n; ++i) {
        v = A.row(i).transpose();
        fft_inplace(grid, v, false);
        A.row(i) = v.transpose();
    }
    return A;
}

}  // namespace

double spectral_radius_bound(const HamiltonianSpec& spec) {
    return 2.0 * spec.grid.d + spec.lambda * std::max(6.0, spec.max_abs_potential());
}

ChebyshevPlan plan_chebyshev(const HamiltonianSpec& spec, double t, double tol, int max_order) {
    require(tol > 0.0, "tol > 0");
    ChebyshevPlan plan;
    plan.radius = spectral_radius_bound(spec);
    plan.tol = tol;
    plan.tau = plan.radius * std::abs(t);
    const double tau = plan.tau;
    if (tau == 0.0) {
        plan.order = 0;
        plan.coefficients = Eigen::VectorXcd::Ones(1);
        return plan;
    }
    // tail(m) = 2 sum_{k>m} (tau/2)^k/k! <= 2 term(m+1) / (1 - tau/(2(m+2))) once m+2 > tau/2
    const double half = 0.5 * tau;
    int m = static_cast<int>(std::ceil(half));
    double bound = 0.0;
    for (;; ++m) {
        if (m > max_order)
            throw NumericalError("Chebyshev order exceeds configured maximum (t too large for max_order)");
        const double ratio = half / (m + 2.0);
        if (ratio >= 1.0) continue;
        const double log_term = (m + 1) * std::log(half) - std::lgamma(m + 2.0);
        bound = 2.0 * std::exp(log_term) / (1.0 - ratio);
        if (bound <= tol) break;
    }
    plan.order = m;
    plan.tail_bound = bound;
    const Eigen::VectorXd J = bessel_j_sequence(m, tau);
    plan.coefficients.resize(m + 1);
    // e^{-i tau x} = J_0 + 2 sum_k (-i)^k J_k T_k(x); conjugate coefficients for t < 0.
    cplx phase(1.0, 0.0);
    const cplx step = t >= 0 ? cplx(0.0, -1.0) : cplx(0.0, 1.0);
    for (int k = 0; k <= m; ++k) {
        plan.coefficients(k) = (k == 0 ? 1.0 : 2.0) * phase * J(k);
        phase *= step;
    }
    return plan;
}

Eigen::VectorXcd apply_plan(const HamiltonianSpec& spec, const ChebyshevPlan& plan, const Eigen::VectorXcd& psi) {
    Eigen::VectorXcd result = plan.coefficients(0) * psi;
    if (plan.order == 0) return result;
    const double s = 1.0 / plan.radius;
    Eigen::VectorXcd prev = psi, cur(psi.size()), next(psi.size());
    apply_hamiltonian(spec, psi, cur);
    cur *= s;
    result += plan.coefficients(1) * cur;
    for (int k = 2; k <= plan.order; ++k) {
        apply_hamiltonian(spec, cur, next);
        next = 2.0 * s * next - prev;
        result += plan.coefficients(k) * next;
        std::swap(prev, cur);
        std::swap(cur, next);
    }
    return result;
}

Eigen::VectorXcd propagate(const HamiltonianSpec& spec, const Eigen::VectorXcd& psi, double t, double tol,
                           int max_order) {
    if (t == 0.0) return psi;
    return apply_plan(spec, plan_chebyshev(spec, t, tol, max_order), psi);
}

ComplexField evolve(const HamiltonianSpec& spec, const ComplexField& psi0, double t, double tol, int max_order) {
    require(psi0.grid == spec.grid, "field grid does not match Hamiltonian grid");
    require(t >= 0.0, "evolve: t >= 0");
    require(tol > 1e-14 && tol < 1e-4, "evolve: tol in (1e-14, 1e-4)");
    return ComplexField(spec.grid, propagate(spec, psi0.values, t, tol, max_order));
}

double msd(const ComplexField& psi, Index origin) {
    const double norm2 = psi.values.squaredNorm();
    require(norm2 > 0.0, "msd of a zero field");
    const TorusGrid& g = psi.grid;
    double s = 0.0;
    for (Index x = 0; x < g.size(); ++x) s += g.dist2(x, origin) * std::norm(psi.values(x));
    return s / norm2;
}

TrajectoryRecord run_trajectory(const HamiltonianSpec& spec, const ComplexField& psi0,
                                const std::vector<double>& times, double tol, Index origin, int max_order) {
    require(psi0.grid == spec.grid, "field grid does not match Hamiltonian grid");
    for (std::size_t i = 0; i < times.size(); ++i) {
        require(times[i] >= 0.0, "trajectory times >= 0");
        if (i) require(times[i] > times[i - 1], "trajectory times strictly increasing");
    }
    // Sub-step long gaps so the expansion order stays moderate.
    const double radius = spectral_radius_bound(spec);
    const double max_tau = 400.0;
    std::vector<int> substeps(times.size());
    int total_steps = 0;
    double prev = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double gap = times[i] - prev;
        substeps[i] = gap > 0 ? std::max(1, static_cast<int>(std::ceil(radius * gap / max_tau))) : 0;
        total_steps += substeps[i];
        prev = times[i];
    }
    const double step_tol = tol / std::max(1, total_steps);

    TrajectoryRecord rec;
    rec.seed = spec.disorder.seed;
    const double mass0 = psi0.values.squaredNorm();
    const double quarter = 0.25 * spec.grid.L;
    Eigen::VectorXcd psi = psi0.values;
    double t_prev = 0.0, r2_prev = msd(psi0, origin), integral = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double gap = times[i] - t_prev;
        if (substeps[i] > 0) {
            const auto plan = plan_chebyshev(spec, gap / substeps[i], step_tol, max_order);
            for (int s = 0; s < substeps[i]; ++s) psi = apply_plan(spec, plan, psi);
        }
        const ComplexField field(spec.grid, psi);
        const double r2 = msd(field, origin);
        const double mass = psi.squaredNorm();
        integral += 0.5 * gap * (r2 + r2_prev);
        rec.times.push_back(times[i]);
        rec.msd.push_back(r2);
        rec.mass.push_back(mass);
        rec.running_time_avg_msd.push_back(times[i] > 0 ? integral / times[i] : r2);
        rec.max_mass_drift = std::max(rec.max_mass_drift, std::abs(mass - mass0));
        if (std::sqrt(r2) > quarter) rec.wraparound_warning = true;
        t_prev = times[i];
        r2_prev = r2;
    }
    return rec;
}

cplx return_amplitude(const TorusGrid& grid, double t) {
    if (grid.L == 1) return 1.0;
    cplx f1 = 0.0;
    for (int k = 0; k < grid.L; ++k) f1 += std::exp(cplx(0.0, t * 2.0 * std::cos(grid.momentum(k))));
    f1 /= static_cast<double>(grid.L);
    return std::pow(f1, grid.d);
}

QuadratureRule phase_resolving_rule(const TorusGrid& grid, double t, int n_quad) {
    require(n_quad >= 1, "n_quad >= 1");
    const double max_rate = 4.0 * grid.d;
    const int panels = std::max(1, static_cast<int>(std::ceil(t * max_rate / std::numbers::pi)));
    return gauss_legendre_composite(n_quad, panels, 0.0, t);
}

CollisionOperator build_T1(const HamiltonianSpec& spec, double t, int n_quad) {
    require_dense(spec.grid);
    require(t >= 0.0, "build_T1: t >= 0");
    const Index n = spec.grid.size();
    CollisionOperator out{1, t, Eigen::MatrixXcd::Zero(n, n)};
    if (t == 0.0) return out;
    const Eigen::VectorXd w = dispersion_table(spec.grid);
    const auto rule = phase_resolving_rule(spec.grid, t, n_quad);
    // Q(xi, xi') = sum_n w_n e^{i s_n (omega(xi) - omega(xi'))} = (A W A^dagger)
    const Index q = rule.nodes.size();
    Eigen::MatrixXcd A(n, q);
    for (Index m = 0; m < q; ++m)
        for (Index i = 0; i < n; ++i) A(i, m) = std::exp(cplx(0.0, rule.nodes(m) * w(i)));
    const Eigen::MatrixXcd Q = (A * rule.weights.asDiagonal()) * A.adjoint();
    out.matrix = to_position_basis(spec.grid, potential_momentum(spec).cwiseProduct(Q));
    return out;
}

std::vector<CollisionOperator> dyson_series(const HamiltonianSpec& spec, int k, double t, int n_quad) {
    require_dense(spec.grid);
    require(k >= 0 && k <= 4, "dyson_series: 0 <= k <= 4");
    require(t >= 0.0, "dyson_series: t >= 0");
    const TorusGrid& g = spec.grid;
    const Index n = g.size();
    const Eigen::VectorXd w = dispersion_table(g);
    const Eigen::MatrixXcd Vm = potential_momentum(spec);
    const Eigen::MatrixXcd T0mom = (w.array() * cplx(0.0, -t)).exp().matrix().asDiagonal();

    std::vector<CollisionOperator> out;
    out.push_back({0, t, to_position_basis(g, T0mom)});
    if (k == 0) return out;

    const int panels = std::max(1, static_cast<int>(std::ceil(t * 4.0 * g.d / std::numbers::pi)));
    const int nodes = n_quad * panels;
    require(static_cast<double>(nodes) * n * n <= 2.0e7, "dyson_series: dense regime overflow");
    const auto base = gauss_legendre(n_quad);
    const Eigen::MatrixXd Qint = legendre_integration_matrix(n_quad);
    const double h = t / panels;

    std::vector<double> s(nodes);
    for (int p = 0; p < panels; ++p)
        for (int i = 0; i < n_quad; ++i) s[p * n_quad + i] = p * h + 0.5 * h * (base.nodes(i) + 1.0);

    // Interaction picture: S_j(s) = e^{isDelta} T_j(s) obeys S_j(s) = int_0^s W(u) S_{j-1}(u) du,
    // W(u) = e^{iuDelta} V e^{-iuDelta}, all in the momentum basis.
    auto W = [&](double u) {
        const Eigen::VectorXcd ph = (w.array() * cplx(0.0, u)).exp();
        return Eigen::MatrixXcd(ph.asDiagonal() * Vm * ph.conjugate().asDiagonal());
    };
    std::vector<Eigen::MatrixXcd> prev(nodes, Eigen::MatrixXcd::Identity(n, n));
    std::vector<Eigen::MatrixXcd> Wn(nodes);
    for (int m = 0; m < nodes; ++m) Wn[m] = W(s[m]);

    for (int j = 1; j <= k; ++j) {
        std::vector<Eigen::MatrixXcd> cur(nodes);
        Eigen::MatrixXcd start = Eigen::MatrixXcd::Zero(n, n);
        std::vector<Eigen::MatrixXcd> G(n_quad);
        for (int p = 0; p < panels; ++p) {
            for (int m = 0; m < n_quad; ++m) G[m] = Wn[p * n_quad + m] * prev[p * n_quad + m];
            for (int i = 0; i < n_quad; ++i) {
                Eigen::MatrixXcd acc = start;
                for (int m = 0; m < n_quad; ++m) acc += (0.5 * h * Qint(i, m)) * G[m];
                cur[p * n_quad + i] = std::move(acc);
            }
            for (int m = 0; m < n_quad; ++m) start += (0.5 * h * base.weights(m)) * G[m];
        }
        Eigen::MatrixXcd Tj = T0mom * start;
        out.push_back({j, t, to_position_basis(g, std::move(Tj))});
        prev = std::move(cur);
    }
    return out;
}

CollisionOperator dyson_Tk(const HamiltonianSpec& spec, int k, double t, int n_quad) {
    auto series = dyson_series(spec, k, t, n_quad);
    return std::move(series.back());
}

double decomposition_residual(const HamiltonianSpec& spec, int k, double s, double t, int n_quad) {
    require(k >= 0, "k >= 0");
    const auto a = dyson_series(spec, k, s, n_quad);
    const auto b = dyson_series(spec, k, t, n_quad);
    const auto ab = dyson_series(spec, k, s + t, n_quad);
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(ab[k].matrix.rows(), ab[k].matrix.cols());
    for (int j = 0; j <= k; ++j) sum += a[j].matrix * b[k - j].matrix;
    return (ab[k].matrix - sum).norm();
}

Eigen::MatrixXcd dense_propagator(const HamiltonianSpec& spec, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_hamiltonian(spec));
    const Eigen::VectorXcd ph = (es.eigenvalues().array() * cplx(0.0, -t)).exp();
    const Eigen::MatrixXcd Q = es.eigenvectors().cast<cplx>();
    return Q * ph.asDiagonal() * Q.transpose();
}

Eigen::MatrixXcd dense_free_propagator(const TorusGrid& grid, double t) {
    const Eigen::VectorXd w = dispersion_table(grid);
    const Eigen::MatrixXcd D = (w.array() * cplx(0.0, -t)).exp().matrix().asDiagonal();
    return to_position_basis(grid, D);
}

double propagator_deviation(const HamiltonianSpec& spec, double t, double tol, DeviationMethod method) {
    require(tol > 0.0, "tol > 0");
    if (spec.lambda == 0.0 || t == 0.0) return 0.0;
    const TorusGrid& g = spec.grid;
    if (method == DeviationMethod::Auto)
        method = g.size() <= 256 ? DeviationMethod::Dense : DeviationMethod::MatrixFree;
    NormOptions opt;
    opt.tol = tol;
    if (method == DeviationMethod::Dense) {
        const Eigen::MatrixXcd D = dense_propagator(spec, t) - dense_free_propagator(g, t);
        return op_norm(D, opt).value;
    }
    // B = A^dagger A = 2 - U0^dagger U - U^dagger U0 with U = e^{-itH}, U0 = e^{-itDelta}.
    const double prop_tol = std::min(1e-11, 0.01 * tol);
    const Eigen::VectorXd w = dispersion_table(g);
    const Eigen::VectorXcd fwd = (w.array() * cplx(0.0, -t)).exp();
    const Eigen::VectorXcd bwd = fwd.conjugate();
    const auto plus = plan_chebyshev(spec, t, prop_tol);
    const auto minus = plan_chebyshev(spec, -t, prop_tol);
    LinearMap B = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
        const Eigen::VectorXcd a = fourier_multiply(g, bwd, apply_plan(spec, plus, v));
        const Eigen::VectorXcd b = apply_plan(spec, minus, fourier_multiply(g, fwd, v));
        return 2.0 * v - a - b;
    };
    return op_norm_lanczos(B, g.size(), opt).value;
}

}  // namespace qdiff
