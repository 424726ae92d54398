#include "qdiff/rmt.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qdiff/numerics.hpp"
#include "qdiff/parallel.hpp"

namespace qdiff {

namespace {

using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Sparse = Eigen::SparseMatrix<double>;

Sparse goe_coefficient(Index N, Index i, Index j) {
    Sparse E(N, N);
    if (i == j) {
        E.insert(i, i) = std::sqrt(2.0);
    } else {
        E.insert(i, j) = 1.0;
        E.insert(j, i) = 1.0;
    }
    E.makeCompressed();
    return E;
}

Sparse diagonal_coefficient(Index N, Index j) {
    Sparse E(N, N);
    E.insert(j, j) = 1.0;
    E.makeCompressed();
    return E;
}

CMat resolvent(const Mat& X, cplx z) {
    CMat A = X.cast<cplx>();
    A.diagonal().array() -= z;
    return A.partialPivLu().inverse();
}

// Running sums of a matrix-valued sample, real and imaginary parts separately.
struct Accumulator {
    CMat sum, sum2;
    explicit Accumulator(Index r = 0, Index c = 0) : sum(CMat::Zero(r, c)), sum2(CMat::Zero(r, c)) {}
    void add(const CMat& x) {
        sum += x;
        sum2.real() += x.real().cwiseAbs2();
        sum2.imag() += x.imag().cwiseAbs2();
    }
    void merge(const Accumulator& o) {
        sum += o.sum;
        sum2 += o.sum2;
    }
    MatrixEstimate estimate(double n) const {
        MatrixEstimate e;
        e.mean = sum / n;
        const auto se = [n](const Mat& s, const Mat& s2) {
            const Mat var = ((s2 - s.cwiseAbs2() / n) / (n - 1.0)).cwiseMax(0.0);
            return Mat((var / n).cwiseSqrt());
        };
        e.standard_error.resize(sum.rows(), sum.cols());
        e.standard_error.real() = se(sum.real(), sum2.real());
        e.standard_error.imag() = se(sum.imag(), sum2.imag());
        return e;
    }
};

double max_z(const MatrixEstimate& e) {
    double z = 0.0;
    auto upd = [&z](double m, double s) {
        if (s > 0.0) z = std::max(z, std::abs(m) / s);
        else if (m != 0.0) z = std::numeric_limits<double>::infinity();
    };
    for (Index i = 0; i < e.mean.size(); ++i) {
        upd(e.mean(i).real(), e.standard_error(i).real());
        upd(e.mean(i).imag(), e.standard_error(i).imag());
    }
    return z;
}

CMat class_means(const GaussianSeriesEnsemble& ens, const CMat& x) {
    const Index nc = ens.symmetry_class_count();
    CMat out = CMat::Zero(nc, 1);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(nc);
    for (Index j = 0; j < x.cols(); ++j)
        for (Index i = 0; i < x.rows(); ++i) {
            const Index c = ens.symmetry_class(i, j);
            out(c) += x(i, j);
            count(c) += 1.0;
        }
    for (Index c = 0; c < nc; ++c)
        if (count(c) > 0) out(c) /= count(c);
    return out;
}

// Per-sample pair of estimators; the check compares their expectations.
template <class SampleFn>
IdentityCheck coupled_check(const GaussianSeriesEnsemble& ens, int n_samples, std::uint64_t seed, SampleFn fn) {
    require(n_samples >= 2, "identity check: n_samples >= 2");
    const Index n = ens.dimension();
    const Index nc = ens.symmetry_class_count();
    const int block = 256;
    const std::size_t n_blocks = static_cast<std::size_t>((n_samples + block - 1) / block);
    struct Sums {
        Accumulator lhs, rhs, res, red;
    };
    std::vector<Sums> sums(n_blocks, Sums{Accumulator(n, n), Accumulator(n, n), Accumulator(n, n), Accumulator(nc, 1)});
    const CounterRng master(seed, 0x61B9);
    parallel_for(n_blocks, [&](std::size_t b) {
        const int lo = static_cast<int>(b) * block;
        const int hi = std::min(n_samples, lo + block);
        for (int s = lo; s < hi; ++s) {
            const auto [l, r] = fn(master.split(static_cast<std::uint64_t>(s)));
            const CMat diff = l - r;
            sums[b].lhs.add(l);
            sums[b].rhs.add(r);
            sums[b].res.add(diff);
            sums[b].red.add(class_means(ens, diff));
        }
    });
    Sums total{Accumulator(n, n), Accumulator(n, n), Accumulator(n, n), Accumulator(nc, 1)};
    for (const auto& s : sums) {
        total.lhs.merge(s.lhs);
        total.rhs.merge(s.rhs);
        total.res.merge(s.res);
        total.red.merge(s.red);
    }
    IdentityCheck out;
    const double ns = n_samples;
    out.n_samples = n_samples;
    out.lhs = total.lhs.estimate(ns);
    out.rhs = total.rhs.estimate(ns);
    out.residual = total.res.estimate(ns);
    out.max_abs_residual = out.residual.mean.cwiseAbs().maxCoeff();
    out.max_z = max_z(out.residual);
    out.max_z_reduced = max_z(total.red.estimate(ns));
    return out;
}

}  // namespace

// ---------------------------------------------------------------- ensembles

std::size_t GaussianSeriesEnsemble::count() const {
    const auto n = static_cast<std::size_t>(dimension());
    switch (family) {
        case CoefficientFamily::Goe: return n * (n + 1) / 2;
        case CoefficientFamily::Diagonal: return n;
        case CoefficientFamily::Explicit: return explicit_coefficients.size();
    }
    return 0;
}

Sparse GaussianSeriesEnsemble::coefficient(std::size_t j) const {
    const Index n = dimension();
    require(j < count(), "coefficient index out of range");
    switch (family) {
        case CoefficientFamily::Goe: {
            Index i = 0, rem = static_cast<Index>(j);
            while (rem >= n - i) {
                rem -= n - i;
                ++i;
            }
            return goe_coefficient(n, i, i + rem);
        }
        case CoefficientFamily::Diagonal: return diagonal_coefficient(n, static_cast<Index>(j));
        case CoefficientFamily::Explicit: return explicit_coefficients[j];
    }
    return {};
}

Mat GaussianSeriesEnsemble::assemble(const Eigen::VectorXd& g) const {
    require(static_cast<std::size_t>(g.size()) == count(), "assemble: one coefficient per family member");
    const Index n = dimension();
    Mat X = base;
    Index c = 0;
    switch (family) {
        case CoefficientFamily::Goe:
            for (Index i = 0; i < n; ++i) {
                X(i, i) += scale * std::sqrt(2.0) * g(c++);
                for (Index j = i + 1; j < n; ++j) {
                    const double v = scale * g(c++);
                    X(i, j) += v;
                    X(j, i) += v;
                }
            }
            break;
        case CoefficientFamily::Diagonal:
            X.diagonal() += scale * g;
            break;
        case CoefficientFamily::Explicit:
            for (const auto& A : explicit_coefficients) X += scale * g(c++) * Mat(A);
            break;
    }
    return X;
}

Mat GaussianSeriesEnsemble::sample(const CounterRng& rng) const {
    Eigen::VectorXd g(static_cast<Index>(count()));
    for (Index j = 0; j < g.size(); ++j) g(j) = rng.gaussian(static_cast<std::uint64_t>(j));
    return assemble(g);
}

Mat GaussianSeriesEnsemble::square_sum() const {
    const Index n = dimension();
    Mat S = Mat::Zero(n, n);
    const auto add = [&S](const Sparse& A) { S += Mat(A * A); };
    switch (family) {
        case CoefficientFamily::Goe:
            // E_ij^2 is diagonal; accumulate its two entries directly
            for (Index i = 0; i < n; ++i)
                for (Index j = i; j < n; ++j) {
                    const Sparse E = goe_coefficient(n, i, j);
                    const Sparse E2 = E * E;
                    for (Index k = 0; k < E2.outerSize(); ++k)
                        for (Sparse::InnerIterator it(E2, k); it; ++it) S(it.row(), it.col()) += it.value();
                }
            break;
        case CoefficientFamily::Diagonal:
            for (Index j = 0; j < n; ++j) add(diagonal_coefficient(n, j));
            break;
        case CoefficientFamily::Explicit:
            for (const auto& A : explicit_coefficients) add(A);
            break;
    }
    return scale * scale * S;
}

CMat GaussianSeriesEnsemble::superoperator(const CMat& B) const {
    const double s2 = scale * scale;
    switch (family) {
        case CoefficientFamily::Goe: return s2 * static_cast<double>(B.rows()) * superoperator_goe(B);
        case CoefficientFamily::Diagonal: return s2 * superoperator_diag(B);
        case CoefficientFamily::Explicit: {
            CMat out = CMat::Zero(B.rows(), B.cols());
            for (const auto& A : explicit_coefficients) {
                const CMat Ad = Mat(A).cast<cplx>();
                out += Ad * B * Ad;
            }
            return s2 * out;
        }
    }
    return {};
}

Index GaussianSeriesEnsemble::symmetry_class(Index i, Index j) const {
    if (family == CoefficientFamily::Explicit) return i * dimension() + j;
    if (grid) return grid->difference(j, i);
    return i == j ? 0 : 1;
}

Index GaussianSeriesEnsemble::symmetry_class_count() const {
    if (family == CoefficientFamily::Explicit) return dimension() * dimension();
    if (grid) return grid->size();
    return 2;
}

GaussianSeriesEnsemble goe_ensemble(int N) {
    require(N >= 2, "N >= 2");
    GaussianSeriesEnsemble e;
    e.base = Mat::Zero(N, N);
    e.family = CoefficientFamily::Goe;
    e.scale = 1.0 / std::sqrt(static_cast<double>(N));
    return e;
}

GaussianSeriesEnsemble diagonal_ensemble(int n) {
    require(n >= 1, "n >= 1");
    GaussianSeriesEnsemble e;
    e.base = Mat::Zero(n, n);
    e.family = CoefficientFamily::Diagonal;
    return e;
}

GaussianSeriesEnsemble anderson_ensemble(const TorusGrid& grid, double lambda) {
    require(lambda >= 0.0, "lambda >= 0");
    GaussianSeriesEnsemble e;
    e.base = dense_laplacian(grid);
    e.family = CoefficientFamily::Diagonal;
    e.scale = lambda;
    e.grid = grid;
    return e;
}

GaussianSeriesEnsemble explicit_ensemble(Mat base, std::vector<Sparse> coefficients, double scale) {
    require(base.rows() == base.cols(), "base must be square");
    require((base - base.transpose()).norm() == 0.0, "base must be symmetric");
    for (const auto& A : coefficients) {
        require(A.rows() == base.rows() && A.cols() == base.cols(), "coefficient dimension mismatch");
        require((Mat(A) - Mat(A).transpose()).norm() == 0.0, "coefficients must be symmetric");
    }
    GaussianSeriesEnsemble e;
    e.base = std::move(base);
    e.family = CoefficientFamily::Explicit;
    e.explicit_coefficients = std::move(coefficients);
    e.scale = scale;
    return e;
}

Mat sample_goe(int N, std::uint64_t seed) { return goe_ensemble(N).sample(CounterRng(seed, 2)); }

// ---------------------------------------------------------------- local law

cplx semicircle_stieltjes(cplx z) {
    cplx m = 0.5 * (-z + std::sqrt(z - 2.0) * std::sqrt(z + 2.0));
    if (m.imag() < 0.0) m = 0.5 * (-z - std::sqrt(z - 2.0) * std::sqrt(z + 2.0));
    return m;
}

std::vector<LocalLawReport> goe_local_law(int N, const std::vector<double>& energies, double eta, int n_samples,
                                          std::uint64_t seed) {
    require(N >= 2, "N >= 2");
    require(eta > 0.0, "eta > 0");
    require(n_samples >= 1, "n_samples >= 1");
    require(!energies.empty(), "at least one energy");
    const GaussianSeriesEnsemble ens = goe_ensemble(N);
    std::vector<Eigen::VectorXd> spectra(n_samples);
    parallel_for(n_samples, [&](std::size_t s) {
        const Mat H = ens.sample(CounterRng(seed, 2).split(s));
        Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw NumericalError("goe_local_law: eigensolver failed");
        spectra[s] = es.eigenvalues();
    });

    std::vector<LocalLawReport> out;
    for (double E : energies) {
        LocalLawReport r;
        r.N = N;
        r.E = E;
        r.eta = eta;
        const cplx z(E, eta);
        std::vector<double> im;
        cplx mean_m = 0.0;
        for (const auto& ev : spectra) {
            const cplx m = (1.0 / (ev.cast<cplx>().array() - z)).mean();
            r.samples.push_back(m);
            im.push_back(m.imag());
            mean_m += m;
        }
        mean_m /= static_cast<double>(n_samples);
        r.mean_im = mean(im);
        r.sd_im = n_samples > 1 ? stddev(im) : 0.0;
        r.reference_im = std::sqrt(std::max(0.0, 1.0 - E * E / 4.0));
        r.semicircle = semicircle_stieltjes(z);
        r.quadratic_residual = std::abs(mean_m * (mean_m + z) + 1.0);
        r.below_proven_scale = eta < 4.0 * std::pow(static_cast<double>(N), -0.25);
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------- NCK

double symmetric_norm(const Mat& X) {
    Eigen::SelfAdjointEigenSolver<Mat> es(X, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric_norm: eigensolver failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

NCKReport nck_check(const GaussianSeriesEnsemble& ens, int n_samples, double alpha, std::uint64_t seed) {
    require(ens.dimension() >= 4, "nck_check: dimension >= 4");
    require(n_samples >= 1, "n_samples >= 1");
    NCKReport r;
    r.n = ens.dimension();
    r.alpha = alpha;
    r.n_samples = n_samples;
    r.sigma = std::sqrt(symmetric_norm(ens.square_sum()));
    r.threshold = alpha * std::sqrt(std::log(static_cast<double>(r.n))) * r.sigma;
    r.norms.resize(n_samples);
    const bool pure_diagonal = ens.family == CoefficientFamily::Diagonal && ens.base.isZero(0.0);
    parallel_for(n_samples, [&](std::size_t s) {
        const Mat X = ens.sample(CounterRng(seed, 3).split(s));
        r.norms[s] = pure_diagonal ? X.diagonal().cwiseAbs().maxCoeff() : symmetric_norm(X);
    });
    r.mean_norm = mean(r.norms);
    const auto over = std::count_if(r.norms.begin(), r.norms.end(), [&](double v) { return v > r.threshold; });
    r.exceedance = static_cast<double>(over) / n_samples;
    return r;
}

// ---------------------------------------------------------------- inequalities

namespace {

Mat matrix_power(const Mat& B, int k) {
    Mat P = Mat::Identity(B.rows(), B.cols());
    for (int i = 0; i < k; ++i) P = P * B;
    return P;
}

Mat random_symmetric(RngStream& rng, int n) {
    Mat G(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) G(i, j) = rng.gaussian();
    return (G + G.transpose()) / std::sqrt(4.0 * n);
}

double phi_value(ConvexFunction phi, double x) {
    switch (phi) {
        case ConvexFunction::Square: return x * x;
        case ConvexFunction::Fourth: return x * x * x * x;
        case ConvexFunction::Exp: return std::exp(x);
    }
    return 0.0;
}

}  // namespace

InequalitySides trace_inequality(const Mat& A, const Mat& B, int p, int l) {
    require(p >= 1 && l >= 0 && l <= 2 * p - 2, "trace_inequality: 0 <= l <= 2p - 2");
    const int m = 2 * p - 2;
    return {(A * matrix_power(B, m - l) * A * matrix_power(B, l)).trace(), (A * A * matrix_power(B, m)).trace()};
}

InequalitySides jensen_inequality(const Mat& A, ConvexFunction phi) {
    Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
    double lhs = 0.0, rhs = 0.0;
    for (Index i = 0; i < A.rows(); ++i) {
        lhs += phi_value(phi, A(i, i));
        rhs += phi_value(phi, es.eigenvalues()(i));
    }
    return {lhs, rhs};
}

InequalitySides holder_inequality(const Mat& A, const Mat& B, double p) {
    require(p > 1.0, "holder_inequality: p > 1");
    const double q = p / (p - 1.0);
    Eigen::SelfAdjointEigenSolver<Mat> ea(A, Eigen::EigenvaluesOnly), eb(B, Eigen::EigenvaluesOnly);
    const double na = std::pow(ea.eigenvalues().cwiseAbs().array().pow(p).sum(), 1.0 / p);
    const double nb = std::pow(eb.eigenvalues().cwiseAbs().array().pow(q).sum(), 1.0 / q);
    return {(A * B).trace(), na * nb};
}

InequalityReport matrix_inequality_suite(int n, int n_trials, std::uint64_t seed) {
    require(n >= 1 && n <= 32, "matrix_inequality_suite: 1 <= n <= 32");
    require(n_trials >= 1, "n_trials >= 1");
    InequalityReport rep;
    rep.n = n;
    rep.trials = n_trials;
    std::vector<InequalityReport> per(n_trials);
    parallel_for(n_trials, [&](std::size_t t) {
        RngStream rng(CounterRng(seed, 4).split(t));
        const Mat A = random_symmetric(rng, n);
        const Mat B = random_symmetric(rng, n);
        InequalityReport& r = per[t];
        auto check = [&](const char* name, double param, InequalitySides s) {
            ++r.checks;
            const double scale = std::abs(s.lhs) + std::abs(s.rhs);
            const double excess = scale > 0.0 ? (s.lhs - s.rhs) / scale : 0.0;
            r.max_relative_excess = std::max(r.max_relative_excess, excess);
            if (s.lhs - s.rhs > 1e-10 * scale)
                r.violations.push_back({name, static_cast<int>(t), param, s});
        };
        r.max_relative_excess = -1.0;
        for (int p : {2, 3, 4}) {
            for (int l = 0; l <= 2 * p - 2; ++l) check("trace", p + 0.01 * l, trace_inequality(A, B, p, l));
            check("holder", p, holder_inequality(A, B, p));
        }
        check("jensen", 2, jensen_inequality(A, ConvexFunction::Square));
        check("jensen", 4, jensen_inequality(A, ConvexFunction::Fourth));
        check("jensen", 0, jensen_inequality(A, ConvexFunction::Exp));
    });
    rep.max_relative_excess = -1.0;
    for (auto& r : per) {
        rep.checks += r.checks;
        rep.max_relative_excess = std::max(rep.max_relative_excess, r.max_relative_excess);
        for (auto& v : r.violations) rep.violations.push_back(std::move(v));
    }
    return rep;
}

// ---------------------------------------------------------------- identity checks

Eigen::MatrixXcd crossing_term(const GaussianSeriesEnsemble& ens, const CMat& Rq, const CMat& R1) {
    const double s2 = ens.scale * ens.scale;
    const Index n = ens.dimension();
    switch (ens.family) {
        case CoefficientFamily::Goe: {
            // inner sum over k: A[Y] = s2 (Y^T + tr Y); outer sum over j pairs tr(B A_j) A_j = s2 (B + B^T)
            const CMat Q = Rq.transpose() * R1;
            const CMat Rq2 = Rq * Rq;
            return s2 * s2 *
                   (Rq.transpose() * R1.transpose() * Rq * R1 + Q.trace() * Q + R1 * (Rq2 + Rq2.transpose()) * R1);
        }
        case CoefficientFamily::Diagonal: {
            const CMat C = (Rq.array() * Rq.transpose().array() * R1.array()).matrix();
            return s2 * s2 * (C * R1);
        }
        case CoefficientFamily::Explicit: {
            CMat out = CMat::Zero(n, n);
            std::vector<CMat> A;
            for (const auto& a : ens.explicit_coefficients) A.push_back(Mat(a).cast<cplx>());
            for (const auto& Aj : A) {
                const CMat left = Rq * Aj * Rq;
                const CMat right = R1 * Aj * R1;
                for (const auto& Ak : A) out += Ak * left * Ak * right;
            }
            return s2 * s2 * out;
        }
    }
    return {};
}

IdentityCheck gibp_identity_check(const GaussianSeriesEnsemble& ens, cplx z, int n_samples, std::uint64_t seed,
                                  int n_pilot) {
    require(z.imag() > 0.0, "eta > 0");
    require(n_pilot >= 1, "n_pilot >= 1");
    const Index n = ens.dimension();
    // shift M from an independent pilot batch
    CMat pilot = CMat::Zero(n, n);
    const CounterRng pilot_rng(seed, 0x9170);
    for (int s = 0; s < n_pilot; ++s) pilot += ens.superoperator(resolvent(ens.sample(pilot_rng.split(s)), z));
    const cplx shift = pilot.trace() / static_cast<double>(n * n_pilot);
    CMat Ginv = ens.base.cast<cplx>();
    Ginv.diagonal().array() -= z + shift;
    const CMat G = Ginv.partialPivLu().inverse();

    auto sample = [&](const CounterRng& rng) {
        const CMat R = resolvent(ens.sample(rng), z);
        CMat AR = ens.superoperator(R);
        AR.diagonal().array() -= shift;
        return std::pair<CMat, CMat>{R, G + G * AR * R};
    };
    IdentityCheck out = coupled_check(ens, n_samples, seed, sample);
    out.shift = shift;
    return out;
}

IdentityCheck crossing_term_eval(const GaussianSeriesEnsemble& ens, cplx z, int n_samples, std::uint64_t seed,
                                 int n_phi) {
    require(z.imag() > 0.0, "eta > 0");
    require(ens.dimension() <= 64, "crossing_term_eval: dimension <= 64");
    require(n_phi >= 1, "n_phi >= 1");
    const QuadratureRule rule = gauss_legendre(n_phi, 0.0, std::numbers::pi / 2);
    const std::size_t ncoef = ens.count();
    auto sample = [&](const CounterRng& rng) {
        const CounterRng r1 = rng.split(1), r2 = rng.split(2);
        Eigen::VectorXd g(ncoef), gpp(ncoef);
        for (std::size_t j = 0; j < ncoef; ++j) {
            g(j) = r1.gaussian(j);
            gpp(j) = r2.gaussian(j);
        }
        auto build = [&](const Eigen::VectorXd& coeffs) { return ens.assemble(coeffs); };
        const CMat R1 = resolvent(build(g), z);
        const CMat R2 = resolvent(build(gpp), z);
        const CMat direct = (ens.superoperator(R1) - ens.superoperator(R2)) * R1;
        CMat interp = CMat::Zero(R1.rows(), R1.cols());
        for (Index k = 0; k < rule.nodes.size(); ++k) {
            const double phi = rule.nodes(k);
            const CMat Rq = resolvent(build(std::sin(phi) * g + std::cos(phi) * gpp), z);
            interp += rule.weights(k) * std::cos(phi) * crossing_term(ens, Rq, R1);
        }
        return std::pair<CMat, CMat>{direct, interp};
    };
    return coupled_check(ens, n_samples, seed, sample);
}

ScalarToy scalar_toy(double lambda, cplx z, int n_nodes) {
    require(z.imag() > 0.0, "eta > 0");
    const QuadratureRule gh = gauss_hermite(n_nodes);
    auto R = [&](double g) { return 1.0 / (lambda * g - z); };
    const double l2 = lambda * lambda;
    ScalarToy t;
    cplx ER = 0.0, ER2 = 0.0;
    for (Index i = 0; i < gh.nodes.size(); ++i) {
        const cplx r = R(gh.nodes(i));
        ER += gh.weights(i) * r;
        ER2 += gh.weights(i) * r * r;
    }
    t.expected_resolvent = ER;
    const cplx M = l2 * ER;
    const cplx G = 1.0 / (-z - M);
    cplx corr = 0.0;
    for (Index i = 0; i < gh.nodes.size(); ++i) {
        const cplx r = R(gh.nodes(i));
        corr += gh.weights(i) * (l2 * r - M) * r;
    }
    t.gibp_rhs = G + G * corr;
    t.crossing_direct = l2 * (ER2 - ER * ER);

    const QuadratureRule gl = gauss_legendre(40, 0.0, std::numbers::pi / 2);
    cplx interp = 0.0;
    for (Index k = 0; k < gl.nodes.size(); ++k) {
        const double phi = gl.nodes(k);
        cplx e = 0.0;
        for (Index i = 0; i < gh.nodes.size(); ++i) {
            const cplx r1 = R(gh.nodes(i));
            for (Index j = 0; j < gh.nodes.size(); ++j) {
                const cplx rq = R(std::sin(phi) * gh.nodes(i) + std::cos(phi) * gh.nodes(j));
                e += gh.weights(i) * gh.weights(j) * rq * rq * r1 * r1;
            }
        }
        interp += gl.weights(k) * std::cos(phi) * l2 * l2 * e;
    }
    t.crossing_interpolated = interp;
    return t;
}

}  // namespace qdiff
