#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qdiff/propagation.hpp"
#include "qdiff/spectral.hpp"

using namespace qdiff;
using std::numbers::pi;

TEST_SUITE("spectral") {

TEST_CASE("dense diagonalisation: free spectrum, trace, residual") {
    const TorusGrid g(1, 8);
    const EigenDecomposition free = dense_diagonalize(make_hamiltonian(g, 0.0, 1));
    std::vector<double> expected;
    for (int k = 0; k < 8; ++k) expected.push_back(2 * std::cos(2 * pi * k / 8));
    std::sort(expected.begin(), expected.end());
    for (int k = 0; k < 8; ++k) CHECK(std::abs(free.eigenvalues(k) - expected[k]) < 1e-10);

    const HamiltonianSpec h = make_hamiltonian(TorusGrid(2, 6), 0.7, 3);
    const EigenDecomposition dec = dense_diagonalize(h);
    CHECK(std::abs(dec.eigenvalues.sum() - h.lambda * h.disorder.values.sum()) < 1e-9);

    const HamiltonianSpec h16 = make_hamiltonian(TorusGrid(1, 16), 0.5, 11);
    const EigenDecomposition d16 = dense_diagonalize(h16);
    CHECK(d16.residual <= 1e-10 * (2 + 6 * 0.5));
    const Eigen::MatrixXd gram = d16.eigenvectors.transpose() * d16.eigenvectors;
    CHECK((gram - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_THROWS_AS(dense_diagonalize(make_hamiltonian(TorusGrid(2, 65), 0.1, 1)), ValidationError);
}

TEST_CASE("smooth cutoff profile") {
    CHECK(SmoothCutoff::bump(0.0) == 1.0);
    CHECK(SmoothCutoff::bump(1.0) == 0.0);
    CHECK(SmoothCutoff::bump(-1.3) == 0.0);
    for (double u = -0.99; u < 1.0; u += 0.01) {
        CHECK(SmoothCutoff::bump(u) >= 0.0);
        CHECK(SmoothCutoff::bump(u) <= 1.0);
    }
}

TEST_CASE("spectral projections") {
    const HamiltonianSpec h = make_hamiltonian(TorusGrid(2, 6), 0.4, 2);
    const EigenDecomposition dec = dense_diagonalize(h);
    const Index n = h.grid.size();

    const Eigen::MatrixXd wide = spectral_projection(dec, {0.0, 1e6});
    CHECK((wide - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);

    // a window strictly between two eigenvalues
    Index gap = 0;
    for (Index k = 1; k < n; ++k)
        if (dec.eigenvalues(k) - dec.eigenvalues(k - 1) > dec.eigenvalues(gap + 1) - dec.eigenvalues(gap)) gap = k - 1;
    const double mid = 0.5 * (dec.eigenvalues(gap) + dec.eigenvalues(gap + 1));
    const double half = 0.49 * (dec.eigenvalues(gap + 1) - dec.eigenvalues(gap));
    CHECK(spectral_projection(dec, {mid, half}).norm() == 0.0);

    const SmoothCutoff chi{0.7, 0.9};
    const Eigen::MatrixXd P = spectral_projection(dec, chi);
    CHECK((P - P.transpose()).norm() < 1e-12);
    double expected = 0.0;
    for (Index k = 0; k < n; ++k) expected = std::max(expected, chi(dec.eigenvalues(k)));
    CHECK(op_norm(P).value == doctest::Approx(expected).epsilon(1e-7));

    // functional calculus: chi(H)^2 against (chi^2)(H)
    Eigen::VectorXd sq(n);
    for (Index k = 0; k < n; ++k) sq(k) = chi(dec.eigenvalues(k)) * chi(dec.eigenvalues(k));
    const Eigen::MatrixXd P2 = dec.eigenvectors * sq.asDiagonal() * dec.eigenvectors.transpose();
    CHECK((P * P - P2).norm() <= 1e-10);
}

TEST_CASE("projection deviation limits") {
    const TorusGrid g(2, 8);
    CHECK(projection_deviation(make_hamiltonian(g, 0.0, 1), 1.0, 0.5) < 1e-10);
    const HamiltonianSpec h = make_hamiltonian(g, 0.1, 1);
    CHECK(projection_deviation(h, 0.0, 4 * 2 + 1e6) < 1e-10);
    CHECK(projection_deviation(h, 1.0, 0.5) > 0.0);
}

TEST_CASE("resolvent columns") {
    const TorusGrid g(2, 12);
    const ResolventQuery q{0.7, 0.3, 5};
    const ResolventColumn free = resolvent_column(make_hamiltonian(g, 0.0, 1), q);
    const Eigen::VectorXd w = dispersion_table(g);
    const Eigen::VectorXcd mult = (w.cast<cplx>().array() - q.z()).inverse();
    const Eigen::VectorXcd oracle = fourier_multiply(g, mult, ComplexField::delta(g, q.y).values);
    CHECK((free.u.values - oracle).norm() <= 1e-9 * oracle.norm());
    CHECK(ward_check(free.u, q) <= 1e-10);

    const TorusGrid one(1, 1);
    const HamiltonianSpec scalar{one, 1.0, disorder_from_values(one, Eigen::VectorXd::Zero(1))};
    const ResolventQuery qi{0.0, 1.0, 0};
    const ResolventColumn s = resolvent_column(scalar, qi);
    CHECK(std::abs(s.u.values(0) - cplx(0, 1)) < 1e-15);
    CHECK(ward_check(s.u, qi) < 1e-15);

    const HamiltonianSpec big = make_hamiltonian(TorusGrid(2, 64), 0.2, 5);
    const ResolventQuery qb{1.0, 0.04, 0};
    const ResolventColumn col = resolvent_column(big, qb);
    CHECK(col.residual <= 1e-10);
    CHECK(ward_check(col.u, qb) <= 1e-8);
    const ResolventColumn it = resolvent_column(big, qb, SolverMethod::Iterative);
    CHECK(ward_check(it.u, qb) <= 1e-8);
    CHECK((it.u.values - col.u.values).norm() <= 1e-8 * col.u.norm());
}

TEST_CASE("resolvent symmetry and Ward on every dense column") {
    const HamiltonianSpec h = make_hamiltonian(TorusGrid(2, 8), 0.5, 9);
    const cplx z(-0.4, 0.15);
    const ResolventSolver solver(h, z);
    Eigen::MatrixXcd R(h.grid.size(), h.grid.size());
    for (Index y = 0; y < h.grid.size(); ++y) {
        const ResolventColumn c = solver.column(y);
        R.col(y) = c.u.values;
        CHECK(ward_check(c.u, {z.real(), z.imag(), y}) <= 1e-8);
    }
    CHECK((R - R.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("mixed norms") {
    const HamiltonianSpec h = make_hamiltonian(TorusGrid(2, 8), 0.4, 4);
    const cplx z(1.0, 0.1);
    const EigenDecomposition dec = dense_diagonalize(h);
    const double dist = (dec.eigenvalues.cast<cplx>().array() - z).abs().minCoeff();
    CHECK(lpq_norm(h, z, 2, 2, NormMode::Exact).value == doctest::Approx(1.0 / dist).epsilon(1e-6));

    const ResolventSolver solver(h, z);
    double max_im = 0.0;
    for (Index x = 0; x < h.grid.size(); ++x) max_im = std::max(max_im, solver.column(x).u.values(x).imag());
    const NormEstimate n12 = lpq_norm(h, z, 1, 2, NormMode::Exact);
    CHECK(n12.exact);
    CHECK(n12.value * n12.value <= max_im / z.imag() * (1 + 1e-10));

    // interpolation between q = 2 and q = inf at p = 1
    const double n14 = lpq_norm(h, z, 1, 4, NormMode::Exact).value;
    const double n1inf = lpq_norm(h, z, 1, kInf, NormMode::Exact).value;
    CHECK(n14 <= std::sqrt(n12.value * n1inf) * (1 + 1e-12));

    for (auto [p, q] : {std::pair{1.0, 2.0}, {1.0, 6.0}, {2.0, 2.0}, {2.0, 6.0}, {1.0, kInf}}) {
        const NormEstimate ex = lpq_norm(h, z, p, q, NormMode::Exact);
        const NormEstimate sa = lpq_norm(h, z, p, q, NormMode::Sampled, 8, 3);
        CHECK_FALSE(sa.exact);
        CHECK(sa.n_sample == 8);
        CHECK(sa.value <= ex.value * (1 + 1e-8));
    }
    CHECK_THROWS_AS(lpq_norm(h, z, 3, 2, NormMode::Exact), ValidationError);
    CHECK_THROWS_AS(lpq_norm(h, z, 2, 1, NormMode::Exact), ValidationError);
}

TEST_CASE("l^1 -> l^6 resolvent norm tracks lambda^2 / eta") {
    const double lambda = 0.2;
    const TorusGrid g(2, 64);
    std::vector<double> scaled;
    for (double eta : {lambda * lambda, lambda * lambda / 2, lambda * lambda / 4}) {
        std::vector<double> v;
        for (std::uint64_t seed = 1; seed <= 8; ++seed)
            v.push_back(lpq_norm(make_hamiltonian(g, lambda, seed), {1.0, eta}, 1, 6, NormMode::Sampled, 16, seed).value *
                        eta / (lambda * lambda));
        scaled.push_back(median(v));
    }
    const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
    CHECK(*hi / *lo <= 10.0);
}

TEST_CASE("eigenfunction l^p norms") {
    const EigenDecomposition dec = dense_diagonalize(make_hamiltonian(TorusGrid(2, 6), 0.3, 2));
    const EigenfunctionNorms n2 = eigenfunction_lp(dec, 2, -10, 10);
    CHECK((n2.norms.array() - 1.0).abs().maxCoeff() < 1e-10);
    CHECK(n2.bulk_count == 36);

    // non-degenerate free states (k = 0 and k = L/2) are flat
    const int L = 16;
    const EigenDecomposition free = dense_diagonalize(make_hamiltonian(TorusGrid(1, L), 0.0, 1));
    const EigenfunctionNorms n6 = eigenfunction_lp(free, 6, -10, 10);
    const double flat = std::pow(static_cast<double>(L), -0.5 + 1.0 / 6.0);
    CHECK(n6.norms(0) == doctest::Approx(flat).epsilon(1e-10));
    CHECK(n6.norms(L - 1) == doctest::Approx(flat).epsilon(1e-10));
}

TEST_CASE("spectrum stays within the Gaussian margin") {
    const TorusGrid g(2, 32);
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const HamiltonianSpec h = make_hamiltonian(g, 0.1, seed);
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense_hamiltonian(h), Eigen::EigenvaluesOnly).eigenvalues();
        CHECK(ev.minCoeff() >= -4 - 0.6);
        CHECK(ev.maxCoeff() <= 4 + 0.6);
    }
}

}

TEST_SUITE("spectral_scaling") {

TEST_CASE("bulk l^6 eigenfunction norms against lambda") {
    const TorusGrid g(2, 48);
    double med[2];
    int i = 0;
    for (double lambda : {0.1, 0.05}) {
        const EigenDecomposition dec = dense_diagonalize(make_hamiltonian(g, lambda, 1));
        med[i++] = eigenfunction_lp(dec, 6, 0.5, 1.5).bulk_median;
    }
    const double ratio = med[0] / med[1];
    MESSAGE("median l^6 ratio (lambda 0.1 / 0.05): " << ratio);
    CHECK(ratio >= 1.4);
    CHECK(ratio <= 2.9);
}

}
