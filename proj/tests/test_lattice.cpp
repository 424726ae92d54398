#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qdiff/lattice.hpp"
#include "qdiff/rng.hpp"

using namespace qdiff;
using std::numbers::pi;

namespace {

Eigen::VectorXcd random_vector(Index n, std::uint64_t seed) {
    RngStream r(seed, 99);
    Eigen::VectorXcd v(n);
    for (Index i = 0; i < n; ++i) v(i) = {r.gaussian(), r.gaussian()};
    return v;
}

ComplexField plane_wave(const TorusGrid& g, const std::vector<int>& k) {
    ComplexField f(g);
    for (Index s = 0; s < g.size(); ++s) {
        const auto x = g.coords(s);
        double phase = 0.0;
        for (int a = 0; a < g.d; ++a) phase += g.momentum(k[a]) * x[a];
        f.values(s) = std::polar(1.0, phase);
    }
    return f;
}

}  // namespace

TEST_SUITE("lattice") {

TEST_CASE("torus indexing and minimal image") {
    const TorusGrid g(3, 5);
    CHECK(g.size() == 125);
    for (Index s = 0; s < g.size(); ++s) CHECK(g.index(g.coords(s)) == s);
    const TorusGrid e(2, 8);
    for (int delta = -20; delta <= 20; ++delta) {
        const int m = e.min_image(delta);
        CHECK(std::abs(m) <= 4);
        CHECK(((m - delta) % 8 + 8) % 8 == 0);
    }
    CHECK(e.dist2(e.index({0, 0}), e.index({7, 5})) == doctest::Approx(1 + 9));
    CHECK(e.momentum(2) == doctest::Approx(2 * pi * 2 / 8));
}

TEST_CASE("dispersion at symmetric points") {
    CHECK(dispersion(Eigen::Vector2d(0, 0)) == doctest::Approx(4.0));
    CHECK(dispersion(Eigen::Vector2d(pi, pi)) == doctest::Approx(-4.0));
    CHECK(std::abs(dispersion(Eigen::Vector2d(pi / 2, pi / 2))) < 1e-14);
}

TEST_CASE("disorder: determinism, moments, independence") {
    const TorusGrid g(2, 64);
    const auto a = sample_disorder(g, 1);
    const auto b = sample_disorder(g, 1);
    CHECK((a.values.array() == b.values.array()).all());
    const double n = static_cast<double>(g.size());
    const double tol = 5.0 / std::sqrt(n);
    CHECK(std::abs(a.values.mean()) < tol);
    const double var = (a.values.array() - a.values.mean()).square().sum() / (n - 1);
    CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
    const auto c = sample_disorder(g, 2);
    const double corr = (a.values.array() * c.values.array()).mean();
    CHECK(std::abs(corr) < tol);
}

TEST_CASE("Hamiltonian: plane waves, dense agreement, linearity") {
    const TorusGrid g(2, 8);
    const HamiltonianSpec free = make_hamiltonian(g, 0.0, 1);
    const std::vector<int> k{3, 5};
    const ComplexField pw = plane_wave(g, k);
    const double w = dispersion(Eigen::Vector2d(g.momentum(3), g.momentum(5)));
    CHECK((apply_hamiltonian(free, pw).values - w * pw.values).norm() < 1e-12 * pw.norm());

    Eigen::VectorXd v(4);
    v << 0.3, -1.2, 0.7, 2.0;
    HamiltonianSpec small{TorusGrid(1, 4), 1.0, disorder_from_values(TorusGrid(1, 4), v)};
    const ComplexField d0 = ComplexField::delta(small.grid, 0);
    const Eigen::VectorXcd dense = dense_hamiltonian(small).cast<cplx>() * d0.values;
    CHECK((apply_hamiltonian(small, d0).values - dense).norm() < 1e-14);

    const ComplexField zero(g);
    CHECK(apply_hamiltonian(make_hamiltonian(g, 0.7, 3), zero).values.norm() == 0.0);
}

TEST_CASE("Hamiltonian self-adjointness on random pairs") {
    const HamiltonianSpec h = make_hamiltonian(TorusGrid(2, 12), 0.8, 4);
    Eigen::VectorXcd Hphi, Hpsi;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXcd phi = random_vector(h.grid.size(), 2 * trial);
        const Eigen::VectorXcd psi = random_vector(h.grid.size(), 2 * trial + 1);
        apply_hamiltonian(h, phi, Hphi);
        apply_hamiltonian(h, psi, Hpsi);
        CHECK(std::abs(phi.dot(Hpsi) - Hphi.dot(psi)) <= 1e-12 * phi.norm() * psi.norm());
    }
}

TEST_CASE("free spectrum containment via Rayleigh quotients") {
    for (int d = 1; d <= 3; ++d) {
        const HamiltonianSpec h = make_hamiltonian(TorusGrid(d, 6), 0.0, 1);
        Eigen::VectorXcd Hv;
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::VectorXcd v = random_vector(h.grid.size(), 1000 + trial);
            apply_hamiltonian(h, v, Hv);
            const double rq = v.dot(Hv).real() / v.squaredNorm();
            CHECK(rq >= -2.0 * d - 1e-12);
            CHECK(rq <= 2.0 * d + 1e-12);
        }
    }
}

TEST_CASE("matrix-free agrees with dense for every size up to 256 sites") {
    const std::vector<TorusGrid> grids{{1, 2}, {1, 3}, {1, 16}, {1, 256}, {2, 2}, {2, 5}, {2, 16}, {3, 3}, {3, 6}};
    for (const auto& g : grids) {
        const HamiltonianSpec h = make_hamiltonian(g, 0.6, 17);
        const Eigen::MatrixXcd dense = dense_hamiltonian(h).cast<cplx>();
        const Eigen::VectorXcd v = random_vector(g.size(), 5);
        Eigen::VectorXcd Hv;
        apply_hamiltonian(h, v, Hv);
        CHECK((Hv - dense * v).norm() <= 1e-12 * v.norm());
        CHECK((dense - dense.adjoint()).norm() == 0.0);
    }
}

TEST_CASE("FFT: delta, round trip, Parseval") {
    const TorusGrid g(2, 16);
    const ComplexField hat = fft_forward(ComplexField::delta(g, 0));
    CHECK((hat.values.array() - cplx(1.0 / 16.0)).abs().maxCoeff() < 1e-15);
    const ComplexField f(g, random_vector(g.size(), 8));
    CHECK((fft_inverse(fft_forward(f)).values - f.values).norm() <= 1e-12 * f.norm());
    CHECK(std::abs(fft_forward(f).norm() - f.norm()) <= 1e-12 * f.norm());
    // non power-of-two side
    const TorusGrid odd(3, 7);
    const ComplexField h(odd, random_vector(odd.size(), 9));
    CHECK((fft_inverse(fft_forward(h)).values - h.values).norm() <= 1e-12 * h.norm());
}

TEST_CASE("free propagation: identity, plane-wave phase, group law, norm") {
    const TorusGrid g(2, 12);
    const ComplexField f(g, random_vector(g.size(), 3));
    CHECK((free_propagate(g, 0.0, f).values - f.values).norm() < 1e-14 * f.norm());
    const ComplexField pw = plane_wave(g, {1, 4});
    const double w = dispersion(Eigen::Vector2d(g.momentum(1), g.momentum(4)));
    const double t = 1.7;
    CHECK((free_propagate(g, t, pw).values - std::polar(1.0, -t * w) * pw.values).norm() < 1e-12 * pw.norm());
    const ComplexField two = free_propagate(g, 0.4, free_propagate(g, 1.1, f));
    CHECK((free_propagate(g, 1.5, f).values - two.values).norm() < 1e-12 * f.norm());
    CHECK(std::abs(free_propagate(g, 9.0, f).norm() - f.norm()) < 1e-12 * f.norm());
}

TEST_CASE("free return amplitude matches J0(2t)") {
    const TorusGrid g(1, 512);
    const double t = 3.0;
    // <0| e^{it Delta} |0> = conj of the e^{-it Delta} amplitude
    const cplx amp = std::conj(free_propagate(g, t, ComplexField::delta(g, 0)).values(0));
    CHECK(std::abs(amp - std::cyl_bessel_j(0.0, 2.0 * t)) < 1e-6);
}

TEST_CASE("isolated site hook") {
    const TorusGrid g(1, 1);
    CHECK(g.size() == 1);
    Eigen::VectorXd v(1);
    v << 0.0;
    const HamiltonianSpec h{g, 1.0, disorder_from_values(g, v)};
    CHECK(apply_hamiltonian(h, ComplexField::delta(g, 0)).values.norm() == 0.0);
}

TEST_CASE("grid mismatch is rejected") {
    const HamiltonianSpec h = make_hamiltonian(TorusGrid(2, 4), 0.1, 1);
    CHECK_THROWS_AS(apply_hamiltonian(h, ComplexField(TorusGrid(2, 5))), ValidationError);
}

}
