#include "qdiff/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "qdiff/numerics.hpp"
#include "qdiff/parallel.hpp"
#include "qdiff/rng.hpp"

namespace qdiff {

namespace {

using SparseC = Eigen::SparseMatrix<cplx>;

Eigen::SparseMatrix<double> sparse_hamiltonian(const HamiltonianSpec& spec) {
    const TorusGrid& g = spec.grid;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(g.size()) * (2 * g.d + 1));
    for (Index i = 0; i < g.size(); ++i) {
        trips.emplace_back(i, i, spec.lambda * spec.disorder.values(i));
        if (g.L == 1) continue;
        const auto x = g.coords(i);
        for (int a = 0; a < g.d; ++a) {
            for (int e : {-1, 1}) {
                auto y = x;
                y[a] += e;
                trips.emplace_back(i, g.index(y), 1.0);
            }
        }
    }
    Eigen::SparseMatrix<double> H(g.size(), g.size());
    H.setFromTriplets(trips.begin(), trips.end());
    return H;
}

}  // namespace

// ---------------------------------------------------------------- diagonalisation

EigenDecomposition dense_diagonalize(const HamiltonianSpec& spec) {
    require(spec.grid.size() <= 4096, "dense_diagonalize requires L^d <= 4096");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_hamiltonian(spec));
    if (es.info() != Eigen::Success) throw NumericalError("dense_diagonalize: eigensolver failed");
    EigenDecomposition out{es.eigenvalues(), es.eigenvectors(), 0.0};
    const Eigen::SparseMatrix<double> H = sparse_hamiltonian(spec);
    const Eigen::MatrixXd R = H * out.eigenvectors - out.eigenvectors * out.eigenvalues.asDiagonal();
    out.residual = R.colwise().norm().maxCoeff();
    return out;
}

double SmoothCutoff::bump(double u) {
    if (!(std::abs(u) < 1.0)) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

Eigen::MatrixXd spectral_projection(const EigenDecomposition& decomp, const SmoothCutoff& cutoff) {
    std::vector<Index> keep;
    for (Index k = 0; k < decomp.eigenvalues.size(); ++k)
        if (cutoff(decomp.eigenvalues(k)) != 0.0) keep.push_back(k);
    const Index n = decomp.eigenvectors.rows();
    Eigen::MatrixXd Q(n, static_cast<Index>(keep.size()));
    Eigen::VectorXd c(static_cast<Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        Q.col(j) = decomp.eigenvectors.col(keep[j]);
        c(j) = cutoff(decomp.eigenvalues(keep[j]));
    }
    return Q * c.asDiagonal() * Q.transpose();
}

Eigen::MatrixXd free_spectral_projection(const TorusGrid& grid, const SmoothCutoff& cutoff) {
    const Eigen::VectorXd w = dispersion_table(grid);
    Eigen::VectorXcd k(grid.size());
    for (Index i = 0; i < grid.size(); ++i) k(i) = cutoff(w(i));
    fft_inplace(grid, k, true);
    k /= std::sqrt(static_cast<double>(grid.size()));
    const Index n = grid.size();
    Eigen::MatrixXd P(n, n);
    for (Index y = 0; y < n; ++y)
        for (Index x = 0; x < n; ++x) P(x, y) = k(grid.difference(x, y)).real();
    return P;
}

double projection_deviation(const TorusGrid& grid, const EigenDecomposition& decomp, double E, double delta) {
    require(delta > 0.0, "delta > 0");
    const SmoothCutoff cutoff{E, delta};
    const Eigen::MatrixXd D = spectral_projection(decomp, cutoff) - free_spectral_projection(grid, cutoff);
    if (D.cwiseAbs().maxCoeff() < 1e-13) return D.norm();
    NormOptions opt;
    opt.tol = 1e-9;
    opt.abs_floor = 1e-11;  // roundoff level of the two projections
    LinearMap D2 = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return D * (D * v); };
    return op_norm_lanczos(D2, D.rows(), opt).value;
}

double projection_deviation(const HamiltonianSpec& spec, double E, double delta) {
    if (spec.lambda == 0.0) return 0.0;
    return projection_deviation(spec.grid, dense_diagonalize(spec), E, delta);
}

// ---------------------------------------------------------------- resolvent

struct ResolventSolver::Impl {
    Eigen::PartialPivLU<Eigen::MatrixXcd> dense;
    Eigen::SparseLU<SparseC, Eigen::COLAMDOrdering<int>> sparse;
    Eigen::VectorXcd free_inverse;  // 1/(omega - z), iterative preconditioner
};

ResolventSolver::ResolventSolver(const HamiltonianSpec& spec, cplx z, SolverMethod method, double tol)
    : spec_(spec), z_(z), method_(method), tol_(tol), impl_(std::make_unique<Impl>()) {
    require(z.imag() > 0.0, "resolvent requires eta > 0");
    const Index n = spec.grid.size();
    if (method_ == SolverMethod::Auto) method_ = n <= 1024 ? SolverMethod::DenseLU : SolverMethod::SparseLU;
    switch (method_) {
        case SolverMethod::DenseLU: {
            require(n <= 4096, "dense LU requires L^d <= 4096");
            Eigen::MatrixXcd A = dense_hamiltonian(spec).cast<cplx>();
            A.diagonal().array() -= z;
            impl_->dense.compute(A);
            break;
        }
        case SolverMethod::SparseLU: {
            SparseC A = sparse_hamiltonian(spec).cast<cplx>();
            SparseC shift(n, n);
            shift.setIdentity();
            A -= z * shift;
            A.makeCompressed();
            impl_->sparse.compute(A);
            if (impl_->sparse.info() != Eigen::Success) throw NumericalError("sparse LU factorisation failed");
            break;
        }
        case SolverMethod::Iterative: {
            const Eigen::VectorXd w = dispersion_table(spec.grid);
            impl_->free_inverse = (w.cast<cplx>().array() - z).inverse();
            break;
        }
        case SolverMethod::Auto:
            break;
    }
}

ResolventSolver::~ResolventSolver() = default;
ResolventSolver::ResolventSolver(ResolventSolver&&) noexcept = default;

Eigen::VectorXcd ResolventSolver::apply(const Eigen::VectorXcd& v) const {
    Eigen::VectorXcd out;
    apply_hamiltonian(spec_, v, out);
    return out - z_ * v;
}

Eigen::VectorXcd ResolventSolver::solve(const Eigen::VectorXcd& b) const {
    switch (method_) {
        case SolverMethod::DenseLU:
            return impl_->dense.solve(b);
        case SolverMethod::SparseLU:
            return impl_->sparse.solve(b);
        default: {
            const TorusGrid& g = spec_.grid;
            const Eigen::VectorXcd& m = impl_->free_inverse;
            auto res = gmres([&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return apply(v); },
                             [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return fourier_multiply(g, m, v); },
                             b, 0.1 * tol_, 80, 20000);
            if (!res.converged)
                throw NumericalError("resolvent GMRES did not converge; achieved residual " +
                                     std::to_string(res.residual));
            return res.x;
        }
    }
}

ResolventColumn ResolventSolver::column(Index y) const {
    const Index n = spec_.grid.size();
    require(y >= 0 && y < n, "resolvent column index out of range");
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(n);
    b(y) = 1.0;
    ResolventColumn out;
    out.u = ComplexField(spec_.grid, solve(b));
    out.residual = (apply(out.u.values) - b).norm();
    out.method = method_;
    if (!(out.residual <= tol_))
        throw NumericalError("resolvent column residual " + std::to_string(out.residual) + " exceeds tolerance");
    return out;
}

ResolventColumn resolvent_column(const HamiltonianSpec& spec, const ResolventQuery& query, SolverMethod method) {
    require(query.eta > 0.0, "eta > 0");
    return ResolventSolver(spec, query.z(), method).column(query.y);
}

double ward_check(const ComplexField& u, const ResolventQuery& query) {
    const double total = u.values.squaredNorm();
    require(total > 0.0, "ward_check of a zero column");
    return std::abs(total - u.values(query.y).imag() / query.eta) / total;
}

// ---------------------------------------------------------------- mixed norms

double lp_norm(const Eigen::VectorXcd& v, double p) {
    if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
    if (p == 2.0) return v.norm();
    return std::pow(v.cwiseAbs().array().pow(p).sum(), 1.0 / p);
}

namespace {

bool supported_pair(double p, double q) {
    if (p != 1.0 && p != 2.0) return false;
    return q == 2.0 || q == 4.0 || q == 6.0 || std::isinf(q);
}

// Nonlinear power iteration for ||R||_{2->q}; monotone ascent from the start vector.
double two_to_q(const ResolventSolver& solver, double q, Eigen::VectorXcd v) {
    auto Rdag = [&](const Eigen::VectorXcd& x) -> Eigen::VectorXcd {
        // R^T = R for complex-symmetric H - z, hence R^dagger x = conj(R conj x)
        return solver.solve(x.conjugate()).conjugate();
    };
    v /= v.norm();
    double value = 0.0;
    for (int it = 0; it < 500; ++it) {
        const Eigen::VectorXcd w = solver.solve(v);
        const double s = lp_norm(w, q);
        if (it > 0 && std::abs(s - value) <= 1e-11 * s) return std::max(s, value);
        value = std::max(value, s);
        Eigen::VectorXcd dual(w.size());
        for (Index i = 0; i < w.size(); ++i) dual(i) = w(i) * std::pow(std::abs(w(i)), q - 2.0);
        v = Rdag(dual);
        v /= v.norm();
    }
    return value;
}

}  // namespace

NormEstimate lpq_norm(const HamiltonianSpec& spec, cplx z, double p, double q, NormMode mode, int n_sample,
                      std::uint64_t sample_seed) {
    require(supported_pair(p, q), "lpq_norm: unsupported (p, q) pair");
    require(z.imag() > 0.0, "lpq_norm requires eta > 0");
    const Index n = spec.grid.size();
    NormEstimate out{p, q, z.imag(), 0.0, mode == NormMode::Exact, 0, sample_seed};
    const ResolventSolver solver(spec, z);

    std::vector<Index> cols;
    if (mode == NormMode::Exact) {
        require(n <= 4096, "exact lpq_norm requires the dense regime L^d <= 4096");
        cols.resize(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) cols[static_cast<std::size_t>(i)] = i;
    } else {
        require(n_sample >= 1, "n_sample >= 1");
        RngStream rng(sample_seed, 0x1b9);
        for (int s = 0; s < n_sample; ++s)
            cols.push_back(static_cast<Index>(rng.bits() % static_cast<std::uint64_t>(n)));
        out.n_sample = n_sample;
    }

    // Column norms in blocks (R is symmetric, so columns are rows too).
    Index best_col = cols.front();
    double best = -1.0;
    const Index block = 256;
    for (std::size_t start = 0; start < cols.size(); start += block) {
        const Index m = std::min<Index>(block, static_cast<Index>(cols.size() - start));
        Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(n, m);
        for (Index j = 0; j < m; ++j) B(cols[start + j], j) = 1.0;
        Eigen::MatrixXcd X(n, m);
        parallel_for(static_cast<std::size_t>(m), [&](std::size_t j) {
            X.col(static_cast<Index>(j)) = solver.solve(B.col(static_cast<Index>(j)));
        });
        for (Index j = 0; j < m; ++j) {
            const double qn = (p == 2.0 && std::isinf(q)) ? X.col(j).norm() : lp_norm(X.col(j), q);
            if (qn > best) {
                best = qn;
                best_col = cols[start + j];
            }
        }
    }
    out.value = best;
    if (mode == NormMode::Sampled || p == 1.0 || std::isinf(q)) return out;

    if (q == 2.0) {
        NormOptions opt;
        opt.tol = 1e-10;
        auto R = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return solver.solve(v); };
        auto Rdag = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
            return solver.solve(v.conjugate()).conjugate();
        };
        out.value = std::max(best, op_norm(R, Rdag, n, opt).value);
        return out;
    }
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
    e(best_col) = 1.0;
    out.value = std::max(best, two_to_q(solver, q, e));
    RngStream rng(sample_seed, 0x2c7);
    for (int s = 0; s < 3; ++s) {
        Eigen::VectorXcd v(n);
        for (Index i = 0; i < n; ++i) v(i) = rng.gaussian();
        out.value = std::max(out.value, two_to_q(solver, q, v));
    }
    return out;
}

EigenfunctionNorms eigenfunction_lp(const EigenDecomposition& decomp, double p, double e_lo, double e_hi) {
    const Index n = decomp.eigenvalues.size();
    EigenfunctionNorms out;
    out.norms.resize(n);
    std::vector<double> bulk;
    for (Index k = 0; k < n; ++k) {
        const auto col = decomp.eigenvectors.col(k);
        out.norms(k) = std::isinf(p) ? col.cwiseAbs().maxCoeff()
                                     : std::pow(col.cwiseAbs().array().pow(p).sum(), 1.0 / p);
        if (decomp.eigenvalues(k) >= e_lo && decomp.eigenvalues(k) <= e_hi) bulk.push_back(out.norms(k));
    }
    out.bulk_count = static_cast<int>(bulk.size());
    if (!bulk.empty()) out.bulk_median = median(bulk);
    return out;
}

}  // namespace qdiff
