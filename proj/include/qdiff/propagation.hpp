#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "qdiff/lattice.hpp"
#include "qdiff/numerics.hpp"

namespace qdiff {

inline constexpr int kDefaultMaxChebyshevOrder = 200000;
/// Largest site count for which collision operators are built as dense matrices.
inline constexpr Index kDenseRegimeSites = 4096;

/// Chebyshev expansion of e^{-itH} on the certified interval [-radius, radius].
struct ChebyshevPlan {
    double radius = 0.0;  ///< spec(H) is contained in [-radius, radius]
    double tau = 0.0;     ///< radius * t
    int order = 0;
    double tol = 0.0;
    double tail_bound = 0.0;      ///< 2 sum_{k>order} |J_k(tau)| bound actually achieved
    Eigen::VectorXcd coefficients;  ///< c_k with e^{-i tau x} ~ sum_k c_k T_k(x)
};

/// Gershgorin radius 2d + lambda * max(6, max|V|): contains the spectrum and the
/// fixed Gaussian margin [-2d - 6 lambda, 2d + 6 lambda].
double spectral_radius_bound(const HamiltonianSpec& spec);

/// Order from the tail bound |J_k(tau)| <= (tau/2)^k / k!; throws NumericalError
/// when the required order exceeds max_order. Negative t gives e^{+i|t|H}.
ChebyshevPlan plan_chebyshev(const HamiltonianSpec& spec, double t, double tol,
                             int max_order = kDefaultMaxChebyshevOrder);

Eigen::VectorXcd apply_plan(const HamiltonianSpec& spec, const ChebyshevPlan& plan, const Eigen::VectorXcd& psi);

/// e^{-itH} psi0, t >= 0, operator-norm error <= tol.
ComplexField evolve(const HamiltonianSpec& spec, const ComplexField& psi0, double t, double tol,
                    int max_order = kDefaultMaxChebyshevOrder);
/// Unchecked variant on raw vectors; any real t.
Eigen::VectorXcd propagate(const HamiltonianSpec& spec, const Eigen::VectorXcd& psi, double t, double tol,
                           int max_order = kDefaultMaxChebyshevOrder);

/// sum_x |x - origin|^2 |psi(x)|^2 / ||psi||^2 with the minimal-image metric.
double msd(const ComplexField& psi, Index origin);

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> msd;
    std::vector<double> mass;
    std::vector<double> running_time_avg_msd;  ///< (1/T) int_0^T r^2 dt, trapezoidal
    std::uint64_t seed = 0;
    bool wraparound_warning = false;  ///< some r(t) exceeded L/4
    double max_mass_drift = 0.0;
};

/// Evolves through increasing `times` (starting from psi0 at t = 0). The error
/// budget tol is split evenly across the propagation steps.
TrajectoryRecord run_trajectory(const HamiltonianSpec& spec, const ComplexField& psi0,
                                const std::vector<double>& times, double tol, Index origin,
                                int max_order = kDefaultMaxChebyshevOrder);

/// f_d(t) = <0| e^{itDelta} |0> = L^{-d} sum_xi e^{it omega(xi)}.
cplx return_amplitude(const TorusGrid& grid, double t);

struct CollisionOperator {
    int order = 0;
    double t = 0.0;
    Eigen::MatrixXcd matrix;  ///< position basis
};

/// Composite Gauss-Legendre rule on [0, t] whose panels span at most pi of
/// phase of e^{is(omega - omega')}; n_quad nodes per panel.
QuadratureRule phase_resolving_rule(const TorusGrid& grid, double t, int n_quad);

/// T_1(t) = int_0^t e^{isDelta} V e^{-isDelta} ds (V without the coupling lambda).
CollisionOperator build_T1(const HamiltonianSpec& spec, double t, int n_quad = 12);

/// T_0(t), ..., T_k(t) from the recursion T_j(t) = int_0^t e^{-i(t-s)Delta} V T_{j-1}(s) ds,
/// with e^{-itH} = sum_j (-i lambda)^j T_j(t).
std::vector<CollisionOperator> dyson_series(const HamiltonianSpec& spec, int k, double t, int n_quad = 12);
CollisionOperator dyson_Tk(const HamiltonianSpec& spec, int k, double t, int n_quad = 12);

/// || T_k(s + t) - sum_{j=0}^k T_j(s) T_{k-j}(t) || (Frobenius), from e^{-i(s+t)H} = e^{-isH} e^{-itH}.
double decomposition_residual(const HamiltonianSpec& spec, int k, double s, double t, int n_quad = 12);

/// Dense e^{-itH} by eigendecomposition (oracle; small systems).
Eigen::MatrixXcd dense_propagator(const HamiltonianSpec& spec, double t);
/// Dense e^{-itDelta} in the position basis.
Eigen::MatrixXcd dense_free_propagator(const TorusGrid& grid, double t);

enum class DeviationMethod { Auto, Dense, MatrixFree };

/// || e^{-itH} - e^{-itDelta} ||. Auto uses dense linear algebra for at most 256
/// sites and Lanczos on the matrix-free operator otherwise.
double propagator_deviation(const HamiltonianSpec& spec, double t, double tol,
                            DeviationMethod method = DeviationMethod::Auto);

}  // namespace qdiff
