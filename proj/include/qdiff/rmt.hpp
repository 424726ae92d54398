#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qdiff/lattice.hpp"
#include "qdiff/rng.hpp"

namespace qdiff {

// ---------------------------------------------------------------- ensembles

enum class CoefficientFamily {
    Goe,       ///< E_ij = |i><j| + |j><i| (i < j), E_ii = sqrt(2)|i><i|
    Diagonal,  ///< |j><j|
    Explicit,  ///< user-supplied list
};

/// X = A_0 + scale * sum_j g_j A_j with i.i.d. standard Gaussians g_j.
struct GaussianSeriesEnsemble {
    Eigen::MatrixXd base;
    CoefficientFamily family = CoefficientFamily::Goe;
    std::vector<Eigen::SparseMatrix<double>> explicit_coefficients;
    double scale = 1.0;
    /// Torus the matrix lives on, when the ensemble is translation invariant.
    std::optional<TorusGrid> grid;

    Index dimension() const { return base.rows(); }
    std::size_t count() const;
    /// A_j without the scale factor.
    Eigen::SparseMatrix<double> coefficient(std::size_t j) const;
    /// A_0 + scale sum_j g_j A_j for given coefficients.
    Eigen::MatrixXd assemble(const Eigen::VectorXd& g) const;
    /// One draw; g_j = rng.gaussian(j).
    Eigen::MatrixXd sample(const CounterRng& rng) const;
    /// scale^2 sum_j A_j^2 by explicit summation over the family.
    Eigen::MatrixXd square_sum() const;
    /// A[B] = scale^2 sum_j A_j B A_j.
    Eigen::MatrixXcd superoperator(const Eigen::MatrixXcd& B) const;
    /// Label of the orbit of entry (i, j) under the ensemble's symmetry group;
    /// expectations of equivariant matrix functions are constant on each label.
    Index symmetry_class(Index i, Index j) const;
    Index symmetry_class_count() const;
};

/// GOE_N: N^{-1/2} sum_{i<=j} g_ij E_ij.
GaussianSeriesEnsemble goe_ensemble(int N);
/// X_diag = sum_j g_j |j><j| on n sites.
GaussianSeriesEnsemble diagonal_ensemble(int n);
/// H = Delta + lambda sum_x g_x |x><x| on a torus.
GaussianSeriesEnsemble anderson_ensemble(const TorusGrid& grid, double lambda);
GaussianSeriesEnsemble explicit_ensemble(Eigen::MatrixXd base, std::vector<Eigen::SparseMatrix<double>> coefficients,
                                         double scale = 1.0);

/// Symmetric matrix with N(0, 1/N) entries above the diagonal and N(0, 2/N) on it.
Eigen::MatrixXd sample_goe(int N, std::uint64_t seed);

// ---------------------------------------------------------------- superoperators

/// A_GOE[B] = N^{-1} B^T + N^{-1} tr(B) Id.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> superoperator_goe(
    const Eigen::MatrixBase<Derived>& B) {
    using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    require(B.rows() == B.cols(), "superoperator_goe: square matrix");
    const auto n = static_cast<typename Derived::RealScalar>(B.rows());
    Mat out = B.transpose();
    out.diagonal().array() += B.trace();
    return out / n;
}

/// N^{-1} sum_{i<=j} E_ij B E_ij, summed term by term.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> superoperator_goe_bruteforce(
    const Eigen::MatrixBase<Derived>& B) {
    using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Index N = B.rows();
    require(B.cols() == N, "superoperator_goe: square matrix");
    Mat out = Mat::Zero(N, N);
    Mat E = Mat::Zero(N, N);
    for (Index i = 0; i < N; ++i) {
        for (Index j = i; j < N; ++j) {
            E.setZero();
            if (i == j) {
                E(i, i) = std::sqrt(2.0);
            } else {
                E(i, j) = 1.0;
                E(j, i) = 1.0;
            }
            out += E * B * E;
        }
    }
    return out / static_cast<typename Derived::RealScalar>(N);
}

/// D[B] = sum_i B_ii |i><i|.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> superoperator_diag(
    const Eigen::MatrixBase<Derived>& B) {
    require(B.rows() == B.cols(), "superoperator_diag: square matrix");
    return B.diagonal().asDiagonal();
}

// ---------------------------------------------------------------- local law

/// m(z) = (-z + sqrt(z^2 - 4)) / 2 with Im m > 0.
cplx semicircle_stieltjes(cplx z);

struct LocalLawReport {
    int N = 0;
    double E = 0.0;
    double eta = 0.0;
    std::vector<cplx> samples;  ///< m_N = N^{-1} tr (H - z)^{-1}
    double mean_im = 0.0;
    double sd_im = 0.0;
    double reference_im = 0.0;  ///< sqrt(1 - (E/2)^2)_+
    cplx semicircle;            ///< m(z) at the same eta
    double quadratic_residual = 0.0;  ///< |m(m + z) + 1| for the sample mean
    bool below_proven_scale = false;  ///< eta < 4 N^{-1/4}
};

/// One eigen-decomposition per sample serves every energy.
std::vector<LocalLawReport> goe_local_law(int N, const std::vector<double>& energies, double eta, int n_samples,
                                          std::uint64_t seed);

// ---------------------------------------------------------------- non-commutative Khintchine

struct NCKReport {
    Index n = 0;
    double alpha = 0.0;
    double sigma = 0.0;  ///< ||sum A_j^2||^{1/2}
    std::vector<double> norms;
    double mean_norm = 0.0;
    double threshold = 0.0;  ///< alpha sqrt(log n) sigma
    double exceedance = 0.0;
    int n_samples = 0;
};

/// Operator norm of a symmetric matrix (largest |eigenvalue|).
double symmetric_norm(const Eigen::MatrixXd& X);

NCKReport nck_check(const GaussianSeriesEnsemble& ensemble, int n_samples, double alpha, std::uint64_t seed);

// ---------------------------------------------------------------- matrix inequalities

struct InequalitySides {
    double lhs = 0.0;
    double rhs = 0.0;
};

/// tr(A B^{2p-2-l} A B^l) <= tr(A^2 B^{2p-2}).
InequalitySides trace_inequality(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int p, int l);

enum class ConvexFunction { Square, Fourth, Exp };
/// sum_j phi(A_jj) <= tr phi(A).
InequalitySides jensen_inequality(const Eigen::MatrixXd& A, ConvexFunction phi);
/// tr(AB) <= (tr|A|^p)^{1/p} (tr|B|^{p'})^{1/p'}, 1/p + 1/p' = 1.
InequalitySides holder_inequality(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double p);

struct InequalityViolation {
    std::string inequality;
    int trial = 0;
    double parameter = 0.0;
    InequalitySides sides;
};

struct InequalityReport {
    int n = 0;
    int trials = 0;
    long long checks = 0;
    std::vector<InequalityViolation> violations;
    double max_relative_excess = 0.0;  ///< max (lhs - rhs) / (|lhs| + |rhs|)
};

/// Random symmetric A, B per trial; p in {2, 3, 4}, every l, phi in {x^2, x^4, exp}.
/// A check fails when lhs - rhs > 1e-10 (|lhs| + |rhs|).
InequalityReport matrix_inequality_suite(int n, int n_trials, std::uint64_t seed);

// ---------------------------------------------------------------- Gaussian integration by parts

/// Mean and standard error of a matrix-valued Monte-Carlo estimator.
struct MatrixEstimate {
    Eigen::MatrixXcd mean;
    Eigen::MatrixXcd standard_error;  ///< real and imaginary parts separately
};

struct IdentityCheck {
    int n_samples = 0;
    MatrixEstimate lhs;        ///< E R (gibp) / direct estimator (crossing)
    MatrixEstimate rhs;        ///< G + G E(A[R] - M)R (gibp) / interpolated estimator (crossing)
    MatrixEstimate residual;   ///< per-sample lhs - rhs
    double max_abs_residual = 0.0;
    double max_z = 0.0;        ///< max over entries and Re/Im of |mean| / SE
    double max_z_reduced = 0.0;  ///< same after averaging each symmetry class per sample
    cplx shift;                ///< M = shift Id (gibp only)
};

/// Checks E(X - z)^{-1} = G + G E[(A[R] - M) R] with G = (A_0 - z - M)^{-1} and
/// M = (scale^2-weighted) sample mean of A[R] from an independent pilot batch,
/// reduced to a multiple of the identity.
IdentityCheck gibp_identity_check(const GaussianSeriesEnsemble& ensemble, cplx z, int n_samples, std::uint64_t seed,
                                  int n_pilot = 256);

/// E A[R - ER] R by (a) A[R(g)]R(g) - A[R(g'')]R(g) and (b) the angle-interpolated
/// crossing term int_0^{pi/2} cos(phi) E sum_{jk} A_k R^phi A_j R^phi A_k R^1 A_j R^1 dphi,
/// R^phi built from sin(phi) g + cos(phi) g''. Both estimators use the same draws.
IdentityCheck crossing_term_eval(const GaussianSeriesEnsemble& ensemble, cplx z, int n_samples, std::uint64_t seed,
                                 int n_phi = 8);

/// sum_{jk} A_k R^q A_j R^q A_k R^1 A_j R^1 (closed forms for the GOE and diagonal families).
Eigen::MatrixXcd crossing_term(const GaussianSeriesEnsemble& ensemble, const Eigen::MatrixXcd& Rq,
                               const Eigen::MatrixXcd& R1);

/// 1 x 1 model H = lambda g, both sides by Gauss-Hermite quadrature.
struct ScalarToy {
    cplx expected_resolvent;  ///< E (lambda g - z)^{-1}
    cplx gibp_rhs;            ///< G + G E[(lambda^2 R - M) R], M = lambda^2 E R
    cplx crossing_direct;     ///< lambda^2 E (R - ER) R
    cplx crossing_interpolated;
};
ScalarToy scalar_toy(double lambda, cplx z, int n_nodes = 320);

}  // namespace qdiff
