#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "qdiff/lattice.hpp"
#include "qdiff/numerics.hpp"

namespace qdiff {

struct EnergyPoint {
    double E = 0.0;
    double eta = 1.0;
    double lambda = 0.0;

    cplx z() const { return {E, eta}; }
};

// ---------------------------------------------------------------- F(z) and the density of states

/// M^{-1} sum_k 1/(2 cos(2 pi k/M) - w): the diagonal Green function of the M-site ring.
cplx ring_green(cplx w, int M);

/// F(z) = M^{-d} sum_xi 1/(omega(xi) - z) over the M^d momentum grid, reduced
/// exactly to a sum of ring Green functions over d-1 axes. M = 0 picks
/// default_resolution(Im z). Below M = 8 max(1, 1/eta) the value is verified by
/// doubling M and NumericalError is thrown if it moves by more than 1e-8.
cplx F_eval(cplx z, int d, int M = 0);
/// Same momentum sum without any resolution check (F of the M-torus itself).
cplx F_torus(cplx z, int d, int M);
/// Brute-force momentum sum (test oracle).
cplx F_eval_direct(cplx z, int d, int M);
/// Side for which the torus sum matches the infinite-lattice F to ~1e-14.
int default_resolution(double eta);

/// -1/sqrt(z^2 - 4) on the branch with positive imaginary part (d = 1).
cplx F_closed_form_1d(cplx z);
/// rho(E) = K(sqrt(1 - E^2/16)) / (2 pi^2) for d = 2, |E| < 4.
double dos_closed_form_2d(double E);

struct DOSEntry {
    double E = 0.0;
    double rho = 0.0;
    double eta = 0.0;  ///< smallest eta used
    bool converged = true;
};
struct DOSTable {
    std::vector<DOSEntry> entries;
};
/// Extrapolates pi^{-1} Im F(E + i eta) to eta -> 0 along eta_sequence (Neville).
/// An empty sequence uses 0.1 / 2^k, k = 0..4. Non-convergence (critical
/// energies) is flagged, not thrown.
DOSEntry dos(double E, int d, const std::vector<double>& eta_sequence = {});
DOSTable dos_table(const std::vector<double>& energies, int d, const std::vector<double>& eta_sequence = {});

// ---------------------------------------------------------------- self-consistent equation

struct ThetaSolution {
    cplx theta;
    double residual = 0.0;  ///< |theta - F(z + lambda^2 theta)|
    int iterations = 0;
    int resolution = 0;
};

/// theta = F(z + lambda^2 theta) by damped fixed-point iteration (gamma = 0.5,
/// theta_0 = F(z)), with a Newton polish if the damped map stalls.
ThetaSolution solve_theta(const EnergyPoint& point, int d, int resolution = 0);

/// Row 0 of M~ = (Delta - z - lambda^2 theta)^{-1} on the grid.
ComplexField mtilde_kernel(const EnergyPoint& point, cplx theta, const TorusGrid& grid);

struct KernelField {
    TorusGrid grid;
    double lambda = 0.0;
    Eigen::VectorXd values;  ///< K~(x) = |M~_{0x}|^2
    double mass = 0.0;       ///< lambda^2 sum K~
    Eigen::VectorXd mean;    ///< lambda^2 sum x K~
    double second_moment = 0.0;
    double fourth_moment = 0.0;
};

KernelField kernel_K(const EnergyPoint& point, cplx theta, const TorusGrid& grid);

/// (K~ * f)(x) = sum_y K~(x - y) f(y), by FFT.
RealField convolve(const KernelField& kernel, const RealField& f);

struct GreenResult {
    RealField g;
    int terms = 0;
};
/// (Id - lambda^2 K)^{-1} f by the Neumann series, stopped when the last
/// term's sup norm is <= tol (1 - mass) ||f||_inf.
GreenResult green_apply(const KernelField& kernel, const RealField& f, double tol = 1e-12);

/// (Id - lambda^2 K)^{-1} (K~ * f).
RealField predict_observable(const KernelField& kernel, const RealField& f, double tol = 1e-12);

/// Indicator of the closed ball |x| <= r (minimal image) around the origin.
RealField ball_indicator(const TorusGrid& grid, double r);

struct SeedStatistics {
    std::vector<std::uint64_t> seeds;
    std::vector<double> values;
    double median = 0.0;
    double lower_quartile = 0.0;
    double upper_quartile = 0.0;
};
SeedStatistics summarize(std::vector<std::uint64_t> seeds, std::vector<double> values);

struct ObservableSample {
    double observable = 0.0;  ///< O[f] = sum_x f(x) |R_{0x}|^2
    cplx R00;
    double ward_residual = 0.0;
};
/// O[f] for one disorder realisation.
ObservableSample measure_observable_single(const HamiltonianSpec& spec, cplx z, const RealField& f);
/// Per-seed O[f] over disorder seeds, with median and quartiles.
SeedStatistics measure_observable(const TorusGrid& grid, double lambda, cplx z, const RealField& f,
                                  const std::vector<std::uint64_t>& seeds);

// ---------------------------------------------------------------- random walk

/// Step distribution of the walk driven by lambda^2 K~ / mass on Z^d
/// (support taken as the minimal-image displacements of the torus kernel).
class StepKernel {
public:
    explicit StepKernel(const KernelField& kernel);
    StepKernel(int d, std::vector<std::vector<int>> steps, std::vector<double> weights);

    int dimension() const { return d_; }
    std::size_t support_size() const { return steps_.size(); }
    const std::vector<int>& step(std::size_t i) const { return steps_[i]; }
    double probability(std::size_t i) const { return prob_[i]; }
    /// sqrt(E |step|^2).
    double sigma() const;
    /// Walker alias draw from two uniforms.
    std::size_t sample(double u1, double u2) const;

private:
    void build_alias();

    int d_ = 0;
    std::vector<std::vector<int>> steps_;
    std::vector<double> prob_;
    std::vector<double> alias_prob_;
    std::vector<std::size_t> alias_;
};

struct AnticoncentrationPoint {
    int N = 0;
    std::uint64_t hits = 0;
    std::uint64_t trials = 0;
    double probability = 0.0;
    Interval wilson;
};
/// Monte-Carlo P(|Y_N - y| <= r) at every checkpoint N (one walk per trial serves all).
std::vector<AnticoncentrationPoint> anticoncentration_mc(const StepKernel& kernel, const std::vector<int>& checkpoints,
                                                         const std::vector<int>& y, double r, std::uint64_t n_trials,
                                                         std::uint64_t seed);
/// Exact P(|Y_1 - y| <= r) by direct summation (N = 1 oracle).
double single_step_ball_probability(const StepKernel& kernel, const std::vector<int>& y, double r);

struct MeanEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
};
/// Monte-Carlo lambda^{-2} sum_{j>=1} (1 - alpha)^j P(|Y_j - x0| <= r), alpha = 1 - mass.
MeanEstimate neumann_walk_mc(const KernelField& kernel, double r, std::uint64_t n_trials, std::uint64_t seed);

// ---------------------------------------------------------------- delocalisation

struct DelocReport {
    double radius = 0.0;  ///< c1 lambda eta^{-1/2}
    SeedStatistics fraction;
};
/// Exterior-mass fraction sum_{|x| >= c1 lambda eta^{-1/2}} |R_{0x}|^2 / (eta^{-1} Im R_00) per seed.
/// Requires lambda^2/2 <= eta <= 2 lambda^2 and L >= 10 lambda eta^{-1/2}.
DelocReport deloc_check(const TorusGrid& grid, double lambda, cplx z, double c1,
                        const std::vector<std::uint64_t>& seeds);

}  // namespace qdiff
