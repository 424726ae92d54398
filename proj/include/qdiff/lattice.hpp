#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

#include "qdiff/errors.hpp"

namespace qdiff {

using Index = Eigen::Index;
using cplx = std::complex<double>;

/// The torus Z^d_L with row-major site indexing (last coordinate fastest).
/// L = 1 is accepted as a single isolated site with no bonds (a degenerate
/// test configuration); physical runs use L >= 2.
struct TorusGrid {
    int d = 1;
    int L = 2;

    TorusGrid() = default;
    TorusGrid(int dim, int side);

    Index size() const { return size_; }
    Index stride(int axis) const;
    std::vector<int> coords(Index site) const;
    Index index(const std::vector<int>& x) const;

    /// Representative of a displacement in [-L/2, L/2].
    int min_image(int delta) const;
    /// Minimal-image squared distance between two sites.
    double dist2(Index a, Index b) const;
    /// Site index of the coordinate difference a - b (mod L per axis).
    Index difference(Index a, Index b) const;
    /// Minimal-image displacement of `site` from the origin.
    std::vector<int> displacement(Index site) const;

    /// Momentum 2*pi*k/L of lattice index k along one axis.
    double momentum(int k) const;

    bool operator==(const TorusGrid& o) const { return d == o.d && L == o.L; }

private:
    Index size_ = 2;
};

/// Values attached to every site of a torus.
template <class Scalar>
struct Field {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    TorusGrid grid;
    Vector values;

    Field() = default;
    explicit Field(const TorusGrid& g) : grid(g), values(Vector::Zero(g.size())) {}
    Field(const TorusGrid& g, Vector v) : grid(g), values(std::move(v)) {
        require(values.size() == grid.size(), "field size does not match grid");
    }

    double norm() const { return values.norm(); }
    static Field delta(const TorusGrid& g, Index site) {
        Field f(g);
        f.values(site) = Scalar(1);
        return f;
    }
};

using ComplexField = Field<cplx>;
using RealField = Field<double>;

/// i.i.d. standard Gaussian potential, a pure function of (grid, seed).
struct DisorderField {
    TorusGrid grid;
    std::uint64_t seed = 0;
    Eigen::VectorXd values;
};

/// H = Delta_L + lambda V.
struct HamiltonianSpec {
    TorusGrid grid;
    double lambda = 0.0;
    DisorderField disorder;

    double max_abs_potential() const;
};

/// omega(xi) = 2 sum_j cos(xi_j).
double dispersion(const Eigen::Ref<const Eigen::VectorXd>& xi);
/// omega on every momentum-lattice point, in the same row-major order as sites.
Eigen::VectorXd dispersion_table(const TorusGrid& grid);

DisorderField sample_disorder(const TorusGrid& grid, std::uint64_t seed);
/// Wraps explicit potential values (test configurations).
DisorderField disorder_from_values(const TorusGrid& grid, Eigen::VectorXd values);
HamiltonianSpec make_hamiltonian(const TorusGrid& grid, double lambda, std::uint64_t seed);

/// out = Delta in (periodic nearest-neighbour hopping, no diagonal).
void apply_laplacian(const TorusGrid& grid, const Eigen::VectorXcd& in, Eigen::VectorXcd& out);
/// out = H in.
void apply_hamiltonian(const HamiltonianSpec& spec, const Eigen::VectorXcd& in, Eigen::VectorXcd& out);
ComplexField apply_hamiltonian(const HamiltonianSpec& spec, const ComplexField& psi);

Eigen::MatrixXd dense_laplacian(const TorusGrid& grid);
Eigen::MatrixXd dense_hamiltonian(const HamiltonianSpec& spec);

/// Unitary d-dimensional DFT in place: psi_hat(xi) = L^{-d/2} sum_x e^{-i xi.x} psi(x).
void fft_inplace(const TorusGrid& grid, Eigen::VectorXcd& v, bool inverse);
ComplexField fft_forward(const ComplexField& field);
ComplexField fft_inverse(const ComplexField& field);

/// Applies the Fourier multiplier m(xi) (row-major over momenta).
Eigen::VectorXcd fourier_multiply(const TorusGrid& grid, const Eigen::VectorXcd& multiplier,
                                  const Eigen::VectorXcd& psi);

/// e^{-it Delta} psi.
ComplexField free_propagate(const TorusGrid& grid, double t, const ComplexField& psi);

}  // namespace qdiff
