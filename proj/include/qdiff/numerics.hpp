#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

namespace qdiff {

using LinearMap = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>;

// ---------------------------------------------------------------- quadrature

struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// n-point Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Composite Gauss-Legendre: `panels` equal panels of n nodes each on [a, b].
QuadratureRule gauss_legendre_composite(int n, int panels, double a, double b);

/// Integration matrix Q for the n Gauss-Legendre nodes x_i on [-1, 1]:
/// sum_m Q(i, m) f(x_m) is the integral of the interpolant of f from -1 to x_i.
Eigen::MatrixXd legendre_integration_matrix(int n);

/// Gauss-Hermite rule for the standard normal weight exp(-x^2/2)/sqrt(2 pi).
QuadratureRule gauss_hermite(int n);

/// Double-exponential (tanh-sinh) quadrature; tolerates integrable endpoint singularities.
double tanh_sinh(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

// ---------------------------------------------------------------- special functions

/// J_0(x), ..., J_m(x) by Miller's backward recurrence normalised with
/// J_0 + 2 sum_k J_{2k} = 1.
Eigen::VectorXd bessel_j_sequence(int m, double x);

// ---------------------------------------------------------------- statistics

double mean(const std::vector<double>& v);
double stddev(const std::vector<double>& v);
/// Linear-interpolation quantile (p in [0, 1]).
double quantile(std::vector<double> v, double p);
double median(std::vector<double> v);

struct Interval {
    double lo;
    double hi;
};
/// Wilson score interval for k successes out of n at normal quantile z.
Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.96);

struct LineFit {
    double slope;
    double intercept;
    double r2;
};
LineFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);
/// Fit log y = slope * log x + c.
LineFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------- operator norms

struct NormOptions {
    double tol = 1e-8;
    int max_iter = 20000;
    int max_restarts = 4;
    std::uint64_t seed = 0x5151;
    /// Norms below this are reported as converged immediately.
    double abs_floor = 1e-300;
};

struct NormResult {
    double value = 0.0;
    int iterations = 0;
    int restarts = 0;
};

/// Largest singular value by power iteration on A^dagger A. Each run stops when
/// the eigen-residual of A^dagger A is below tol relative to the estimate; the
/// result is accepted once two independent random starts agree within 2 tol.
NormResult op_norm(const LinearMap& A, const LinearMap& Adag, Eigen::Index n, const NormOptions& opt = {});
NormResult op_norm(const Eigen::MatrixXcd& A, const NormOptions& opt = {});
NormResult op_norm(const Eigen::MatrixXd& A, const NormOptions& opt = {});

/// Same contract as op_norm, using Lanczos with full reorthogonalisation on the
/// Hermitian operator B = A^dagger A (B supplied directly). Needs far fewer
/// applications of B than power iteration.
NormResult op_norm_lanczos(const LinearMap& AdagA, Eigen::Index n, const NormOptions& opt = {},
                           int max_krylov = 200);

// ---------------------------------------------------------------- linear solves

struct SolveResult {
    Eigen::VectorXcd x;
    double residual = 0.0;  ///< relative residual ||b - A x|| / ||b||
    int iterations = 0;
    bool converged = false;
};

/// Restarted GMRES with right preconditioner P (A P y = b, x = P y).
SolveResult gmres(const LinearMap& A, const LinearMap& P, const Eigen::VectorXcd& b, double tol,
                  int restart = 60, int max_iter = 5000);

}  // namespace qdiff
