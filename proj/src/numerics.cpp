#include "qdiff/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "qdiff/errors.hpp"
#include "qdiff/rng.hpp"

namespace qdiff {

using Eigen::Index;
using cplx = std::complex<double>;

// ---------------------------------------------------------------- quadrature

QuadratureRule gauss_legendre(int n, double a, double b) {
    require(n >= 1, "quadrature order n >= 1");
    QuadratureRule r{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes(i) = -x;
        r.nodes(n - 1 - i) = x;
        r.weights(i) = w;
        r.weights(n - 1 - i) = w;
    }
    const double h = 0.5 * (b - a), c = 0.5 * (b + a);
    r.nodes = (r.nodes.array() * h + c).matrix();
    r.weights *= h;
    return r;
}

QuadratureRule gauss_legendre_composite(int n, int panels, double a, double b) {
    require(panels >= 1, "panel count >= 1");
    QuadratureRule out{Eigen::VectorXd(n * panels), Eigen::VectorXd(n * panels)};
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const auto r = gauss_legendre(n, a + p * h, a + (p + 1) * h);
        out.nodes.segment(p * n, n) = r.nodes;
        out.weights.segment(p * n, n) = r.weights;
    }
    return out;
}

namespace {
// P_0..P_{n} at x.
Eigen::VectorXd legendre_values(int n, double x) {
    Eigen::VectorXd p(n + 1);
    p(0) = 1.0;
    if (n >= 1) p(1) = x;
    for (int k = 2; k <= n; ++k) p(k) = ((2.0 * k - 1.0) * x * p(k - 1) - (k - 1.0) * p(k - 2)) / k;
    return p;
}
}  // namespace

Eigen::MatrixXd legendre_integration_matrix(int n) {
    const auto r = gauss_legendre(n);
    Eigen::MatrixXd P(n, n + 1);
    for (int i = 0; i < n; ++i) P.row(i) = legendre_values(n, r.nodes(i)).transpose();
    Eigen::MatrixXd Q(n, n);
    for (int i = 0; i < n; ++i) {
        for (int m = 0; m < n; ++m) {
            double s = 0.5 * (r.nodes(i) + 1.0);
            for (int k = 1; k < n; ++k) s += 0.5 * P(m, k) * (P(i, k + 1) - P(i, k - 1));
            Q(i, m) = r.weights(m) * s;
        }
    }
    return Q;
}

QuadratureRule gauss_hermite(int n) {
    require(n >= 1, "quadrature order n >= 1");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    QuadratureRule r{es.eigenvalues(), es.eigenvectors().row(0).transpose().array().square().matrix()};
    return r;
}

double tanh_sinh(const std::function<double(double)>& f, double a, double b, double tol) {
    const double h = 0.5 * (b - a);
    const double half_pi = 0.5 * std::numbers::pi;
    auto level_sum = [&](double step, bool odd_only) {
        double s = 0.0;
        const int kmax = static_cast<int>(std::ceil(3.5 / step));
        for (int k = -kmax; k <= kmax; ++k) {
            if (odd_only && k % 2 == 0) continue;
            const double t = k * step;
            const double u = half_pi * std::sinh(t);
            const double ch = std::cosh(u);
            const double w = half_pi * std::cosh(t) / (ch * ch);
            // distance from the nearer endpoint, computed without cancellation
            const double gap = h * 2.0 / (std::exp(2.0 * std::abs(u)) + 1.0);
            const double x = (u >= 0) ? b - gap : a + gap;
            if (gap <= 0.0 || x <= a || x >= b) continue;
            s += w * f(x);
        }
        return s;
    };
    double step = 0.5;
    double sum = level_sum(step, false);
    double I = h * step * sum;
    for (int level = 0; level < 14; ++level) {
        step *= 0.5;
        sum += level_sum(step, true);
        const double In = h * step * sum;
        if (level >= 2 && std::abs(In - I) <= tol * std::max(1.0, std::abs(In))) return In;
        I = In;
    }
    return I;
}

// ---------------------------------------------------------------- special functions

Eigen::VectorXd bessel_j_sequence(int m, double x) {
    require(m >= 0, "Bessel order m >= 0");
    require(x >= 0.0, "Bessel argument x >= 0");
    Eigen::VectorXd J = Eigen::VectorXd::Zero(m + 1);
    if (x == 0.0) {
        J(0) = 1.0;
        return J;
    }
    const int top = std::max(m, static_cast<int>(std::ceil(x)));
    int start = top + 30 + static_cast<int>(std::ceil(10.0 * std::cbrt(x + 1.0)));
    if (start % 2) ++start;
    double jp1 = 0.0, j = 1e-300, norm = 0.0;
    for (int k = start; k >= 1; --k) {
        const double jm1 = 2.0 * k / x * j - jp1;
        jp1 = j;
        j = jm1;  // now holds J_{k-1}
        if (k - 1 <= m) J(k - 1) = j;
        if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * j;
        if (std::abs(j) > 1e250) {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            J *= 1e-250;
        }
    }
    norm += j;  // J_0
    J /= norm;
    return J;
}

// ---------------------------------------------------------------- statistics

double mean(const std::vector<double>& v) {
    require(!v.empty(), "mean of empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
    require(v.size() >= 2, "stddev needs two samples");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> v, double p) {
    require(!v.empty(), "quantile of empty sample");
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
    require(n > 0, "Wilson interval needs n > 0");
    const double nn = static_cast<double>(n), p = static_cast<double>(k) / nn;
    const double den = 1.0 + z * z / nn;
    const double centre = (p + z * z / (2.0 * nn)) / den;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / den;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

LineFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "linear fit needs two matching points");
    const double mx = mean(x), my = mean(y);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    const double r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return {slope, my - slope * mx, r2};
}

LineFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0 && y[i] > 0, "log-log fit needs positive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return linear_fit(lx, ly);
}

// ---------------------------------------------------------------- operator norms

namespace {

Eigen::VectorXcd random_unit(Index n, std::uint64_t seed, std::uint64_t stream) {
    RngStream rng(seed, stream);
    Eigen::VectorXcd v(n);
    for (Index i = 0; i < n; ++i) {
        const double re = rng.gaussian();
        v(i) = cplx(re, rng.gaussian());
    }
    return v / v.norm();
}

bool agree(double a, double b, double tol, double floor) {
    if (std::max(a, b) <= floor) return true;
    return std::abs(a - b) <= 2.0 * tol * std::max({a, b, 1e-300});
}

template <class SingleRun>
NormResult certified(const NormOptions& opt, SingleRun run) {
    std::vector<double> values;
    NormResult out;
    for (int r = 0; r < std::max(2, opt.max_restarts); ++r) {
        const auto [value, iters] = run(r);
        out.iterations += iters;
        out.restarts = r + 1;
        for (double prev : values) {
            if (agree(prev, value, opt.tol, opt.abs_floor)) {
                out.value = std::max(prev, value);
                return out;
            }
        }
        values.push_back(value);
    }
    throw NumericalError("operator norm: independent restarts did not agree within 2*tol");
}

}  // namespace

NormResult op_norm(const LinearMap& A, const LinearMap& Adag, Index n, const NormOptions& opt) {
    return certified(opt, [&](int restart) -> std::pair<double, int> {
        Eigen::VectorXcd v = random_unit(n, opt.seed, static_cast<std::uint64_t>(restart));
        for (int it = 1; it <= opt.max_iter; ++it) {
            const Eigen::VectorXcd w = A(v);
            const double mu = w.squaredNorm();
            if (std::sqrt(mu) <= opt.abs_floor) return {std::sqrt(mu), it};
            const Eigen::VectorXcd u = Adag(w);
            const double res = (u - mu * v).norm();
            if (res <= opt.tol * mu) return {std::sqrt(mu), it};
            v = u / u.norm();
        }
        throw NumericalError("operator norm: power iteration did not converge");
    });
}

NormResult op_norm(const Eigen::MatrixXcd& A, const NormOptions& opt) {
    require(A.rows() == A.cols(), "op_norm expects a square operator");
    return op_norm([&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return A * v; },
                   [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return A.adjoint() * v; }, A.cols(),
                   opt);
}

NormResult op_norm(const Eigen::MatrixXd& A, const NormOptions& opt) {
    require(A.rows() == A.cols(), "op_norm expects a square operator");
    return op_norm([&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return A * v; },
                   [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return A.transpose() * v; },
                   A.cols(), opt);
}

NormResult op_norm_lanczos(const LinearMap& AdagA, Index n, const NormOptions& opt, int max_krylov) {
    const int kmax = static_cast<int>(std::min<Index>(max_krylov, n));
    return certified(opt, [&](int restart) -> std::pair<double, int> {
        Eigen::MatrixXcd V(n, kmax + 1);
        std::vector<double> alpha, beta;
        V.col(0) = random_unit(n, opt.seed, 1000 + static_cast<std::uint64_t>(restart));
        double theta = 0.0;
        for (int j = 0; j < kmax; ++j) {
            Eigen::VectorXcd w = AdagA(V.col(j));
            alpha.push_back(V.col(j).dot(w).real());
            for (int pass = 0; pass < 2; ++pass) {
                const Eigen::VectorXcd c = V.leftCols(j + 1).adjoint() * w;
                w -= V.leftCols(j + 1) * c;
            }
            const double b = w.norm();
            const int m = j + 1;
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
            for (int i = 0; i < m; ++i) T(i, i) = alpha[i];
            for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            theta = es.eigenvalues()(m - 1);
            const double resid = b * std::abs(es.eigenvectors()(m - 1, m - 1));
            if (std::sqrt(std::max(theta, 0.0)) <= opt.abs_floor) return {0.0, m};
            if (resid <= opt.tol * theta || b <= 1e-14 * std::max(theta, 1e-300))
                return {std::sqrt(std::max(theta, 0.0)), m};
            beta.push_back(b);
            V.col(j + 1) = w / b;
        }
        throw NumericalError("operator norm: Lanczos did not converge within the Krylov limit");
    });
}

// ---------------------------------------------------------------- linear solves

SolveResult gmres(const LinearMap& A, const LinearMap& P, const Eigen::VectorXcd& b, double tol, int restart,
                  int max_iter) {
    const Index n = b.size();
    SolveResult out;
    out.x = Eigen::VectorXcd::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        out.converged = true;
        return out;
    }
    Eigen::VectorXcd r = b;
    int total = 0;
    while (total < max_iter) {
        const double beta0 = r.norm();
        out.residual = beta0 / bnorm;
        if (out.residual <= tol) {
            out.converged = true;
            break;
        }
        const int m = restart;
        Eigen::MatrixXcd V(n, m + 1);
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
        std::vector<cplx> cs(m), sn(m);
        Eigen::VectorXcd g = Eigen::VectorXcd::Zero(m + 1);
        g(0) = beta0;
        V.col(0) = r / beta0;
        int k = 0;
        for (; k < m && total < max_iter; ++k, ++total) {
            Eigen::VectorXcd w = A(P(V.col(k)));
            for (int i = 0; i <= k; ++i) {
                H(i, k) = V.col(i).dot(w);
                w -= H(i, k) * V.col(i);
            }
            H(k + 1, k) = w.norm();
            if (std::abs(H(k + 1, k)) > 0) V.col(k + 1) = w / H(k + 1, k);
            for (int i = 0; i < k; ++i) {
                const cplx t = std::conj(cs[i]) * H(i, k) + std::conj(sn[i]) * H(i + 1, k);
                H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
                H(i, k) = t;
            }
            const double den = std::hypot(std::abs(H(k, k)), std::abs(H(k + 1, k)));
            cs[k] = den > 0 ? H(k, k) / den : cplx(1.0);
            sn[k] = den > 0 ? H(k + 1, k) / den : cplx(0.0);
            H(k, k) = den;
            H(k + 1, k) = 0.0;
            g(k + 1) = -sn[k] * g(k);
            g(k) = std::conj(cs[k]) * g(k);
            if (std::abs(g(k + 1)) / bnorm <= tol) {
                ++k;
                ++total;
                break;
            }
        }
        const Eigen::VectorXcd y =
            H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
        out.x += P(V.leftCols(k) * y);
        r = b - A(out.x);
        out.iterations = total;
    }
    out.residual = r.norm() / bnorm;
    out.converged = out.residual <= tol;
    return out;
}

}  // namespace qdiff
