#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "qdiff/lattice.hpp"

namespace qdiff {

struct EigenDecomposition {
    Eigen::VectorXd eigenvalues;   ///< ascending
    Eigen::MatrixXd eigenvectors;  ///< orthonormal columns
    double residual = 0.0;         ///< max_k ||H psi_k - E_k psi_k||
};

EigenDecomposition dense_diagonalize(const HamiltonianSpec& spec);

/// chi_{delta,E}(x) = chi((x - E)/delta) with chi(u) = exp(1 - 1/(1 - u^2)) on (-1, 1).
struct SmoothCutoff {
    double E = 0.0;
    double delta = 1.0;

    static double bump(double u);
    double operator()(double x) const { return bump((x - E) / delta); }
};

/// chi(H) = Q diag(chi(E_k)) Q^T.
Eigen::MatrixXd spectral_projection(const EigenDecomposition& decomp, const SmoothCutoff& cutoff);
/// chi(Delta) from the Fourier multiplier chi(omega(xi)).
Eigen::MatrixXd free_spectral_projection(const TorusGrid& grid, const SmoothCutoff& cutoff);

/// || chi_{delta,E}(H) - chi_{delta,E}(Delta) ||.
double projection_deviation(const HamiltonianSpec& spec, double E, double delta);
/// Same, reusing a decomposition of H across several windows.
double projection_deviation(const TorusGrid& grid, const EigenDecomposition& decomp, double E, double delta);

struct ResolventQuery {
    double E = 0.0;
    double eta = 1.0;
    Index y = 0;

    cplx z() const { return {E, eta}; }
};

enum class SolverMethod { Auto, DenseLU, SparseLU, Iterative };

struct ResolventColumn {
    ComplexField u;
    double residual = 0.0;  ///< ||(H - z)u - delta_y||
    int iterations = 0;
    SolverMethod method = SolverMethod::Auto;
};

/// Factorises H - z once and solves for any number of columns.
/// Auto picks dense LU up to 1024 sites and sparse LU beyond; Iterative is
/// GMRES right-preconditioned with the FFT-diagonal free resolvent (Delta - z)^{-1}.
class ResolventSolver {
public:
    ResolventSolver(const HamiltonianSpec& spec, cplx z, SolverMethod method = SolverMethod::Auto,
                    double tol = 1e-10);
    ~ResolventSolver();
    ResolventSolver(ResolventSolver&&) noexcept;

    ResolventColumn column(Index y) const;
    Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const;
    /// (H - z) v, matrix-free.
    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;

    SolverMethod method() const { return method_; }
    const HamiltonianSpec& spec() const { return spec_; }
    cplx z() const { return z_; }

private:
    HamiltonianSpec spec_;
    cplx z_;
    SolverMethod method_;
    double tol_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Solves (H - z) u = delta_y; throws NumericalError if the relative residual exceeds 1e-10.
ResolventColumn resolvent_column(const HamiltonianSpec& spec, const ResolventQuery& query,
                                 SolverMethod method = SolverMethod::Auto);

/// |sum_y |u(y)|^2 - eta^{-1} Im u(x)| / sum_y |u(y)|^2 for u = R(z) delta_x.
double ward_check(const ComplexField& u, const ResolventQuery& query);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct NormEstimate {
    double p = 1.0;
    double q = 2.0;
    double eta = 0.0;
    double value = 0.0;
    bool exact = false;  ///< false: sampled lower bound
    int n_sample = 0;
    std::uint64_t seed = 0;
};

enum class NormMode { Exact, Sampled };

/// ||R(z)||_{p->q} for (p, q) in {(1,2),(2,2),(1,4),(2,4),(1,6),(2,6),(1,inf),(2,inf)}.
/// Exact mode needs the dense regime; Sampled takes the max over n_sample random columns.
NormEstimate lpq_norm(const HamiltonianSpec& spec, cplx z, double p, double q, NormMode mode,
                      int n_sample = 32, std::uint64_t sample_seed = 1);

/// l^p norm of a complex vector, p = kInf allowed.
double lp_norm(const Eigen::VectorXcd& v, double p);

struct EigenfunctionNorms {
    Eigen::VectorXd norms;
    double bulk_median = 0.0;
    int bulk_count = 0;
};

/// ||psi_k||_p for every eigenvector, plus the median over E_k in [e_lo, e_hi].
EigenfunctionNorms eigenfunction_lp(const EigenDecomposition& decomp, double p, double e_lo, double e_hi);

}  // namespace qdiff
