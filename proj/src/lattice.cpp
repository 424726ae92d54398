#include "qdiff/lattice.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

#include "qdiff/rng.hpp"

namespace qdiff {

namespace {
constexpr std::uint64_t kDisorderStream = 0x01;
}

TorusGrid::TorusGrid(int dim, int side) : d(dim), L(side) {
    require(dim >= 1, "grid dimension d >= 1");
    require(side >= 1, "grid side L >= 1");
    double n = std::pow(static_cast<double>(side), dim);
    require(n < 9.0e15, "grid too large");
    size_ = static_cast<Index>(n);
}

Index TorusGrid::stride(int axis) const {
    Index s = 1;
    for (int a = axis + 1; a < d; ++a) s *= L;
    return s;
}

std::vector<int> TorusGrid::coords(Index site) const {
    std::vector<int> x(d);
    for (int a = d - 1; a >= 0; --a) {
        x[a] = static_cast<int>(site % L);
        site /= L;
    }
    return x;
}

Index TorusGrid::index(const std::vector<int>& x) const {
    Index site = 0;
    for (int a = 0; a < d; ++a) {
        int c = x[a] % L;
        if (c < 0) c += L;
        site = site * L + c;
    }
    return site;
}

int TorusGrid::min_image(int delta) const {
    int r = delta % L;
    if (r < 0) r += L;
    if (r > L / 2) r -= L;
    return r;
}

double TorusGrid::dist2(Index a, Index b) const {
    double s = 0.0;
    for (int ax = d - 1; ax >= 0; --ax) {
        const int m = min_image(static_cast<int>(a % L) - static_cast<int>(b % L));
        s += static_cast<double>(m) * m;
        a /= L;
        b /= L;
    }
    return s;
}

Index TorusGrid::difference(Index a, Index b) const {
    Index out = 0, scale = 1;
    for (int ax = 0; ax < d; ++ax) {
        int c = static_cast<int>(a % L) - static_cast<int>(b % L);
        if (c < 0) c += L;
        out += c * scale;
        scale *= L;
        a /= L;
        b /= L;
    }
    return out;
}

std::vector<int> TorusGrid::displacement(Index site) const {
    auto x = coords(site);
    for (int& c : x) c = min_image(c);
    return x;
}

double TorusGrid::momentum(int k) const { return 2.0 * std::numbers::pi * k / L; }

double HamiltonianSpec::max_abs_potential() const {
    return disorder.values.size() ? disorder.values.cwiseAbs().maxCoeff() : 0.0;
}

double dispersion(const Eigen::Ref<const Eigen::VectorXd>& xi) {
    return 2.0 * xi.array().cos().sum();
}

Eigen::VectorXd dispersion_table(const TorusGrid& grid) {
    // A single site has no bonds, so its "Laplacian" is the zero operator.
    if (grid.L == 1) return Eigen::VectorXd::Zero(grid.size());
    Eigen::VectorXd axis(grid.L);
    for (int k = 0; k < grid.L; ++k) axis(k) = 2.0 * std::cos(grid.momentum(k));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(grid.size());
    for (int a = 0; a < grid.d; ++a) {
        const Index s = grid.stride(a);
        for (Index i = 0; i < grid.size(); ++i) w(i) += axis((i / s) % grid.L);
    }
    return w;
}

DisorderField sample_disorder(const TorusGrid& grid, std::uint64_t seed) {
    const CounterRng rng(seed, kDisorderStream);
    Eigen::VectorXd v(grid.size());
    for (Index i = 0; i < grid.size(); ++i) v(i) = rng.gaussian(static_cast<std::uint64_t>(i));
    return {grid, seed, std::move(v)};
}

DisorderField disorder_from_values(const TorusGrid& grid, Eigen::VectorXd values) {
    require(values.size() == grid.size(), "potential size does not match grid");
    return {grid, 0, std::move(values)};
}

HamiltonianSpec make_hamiltonian(const TorusGrid& grid, double lambda, std::uint64_t seed) {
    require(lambda >= 0.0, "lambda >= 0");
    return {grid, lambda, sample_disorder(grid, seed)};
}

void apply_laplacian(const TorusGrid& grid, const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
    require(in.size() == grid.size(), "vector size does not match grid");
    const Index n = grid.size();
    const int L = grid.L;
    out.setZero(n);
    if (L == 1) return;
    const cplx* src = in.data();
    cplx* dst = out.data();
    for (int a = 0; a < grid.d; ++a) {
        const Index s = grid.stride(a);
        const Index block = s * L;
        for (Index base = 0; base < n; base += block) {
            for (int j = 0; j < L; ++j) {
                const Index off = base + j * s;
                const Index up = base + ((j + 1) % L) * s;
                const Index dn = base + ((j + L - 1) % L) * s;
                for (Index k = 0; k < s; ++k) dst[off + k] += src[up + k] + src[dn + k];
            }
        }
    }
}

void apply_hamiltonian(const HamiltonianSpec& spec, const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
    apply_laplacian(spec.grid, in, out);
    if (spec.lambda != 0.0) out.array() += spec.lambda * spec.disorder.values.array() * in.array();
}

ComplexField apply_hamiltonian(const HamiltonianSpec& spec, const ComplexField& psi) {
    require(psi.grid == spec.grid, "field grid does not match Hamiltonian grid");
    ComplexField out(spec.grid);
    apply_hamiltonian(spec, psi.values, out.values);
    return out;
}

Eigen::MatrixXd dense_laplacian(const TorusGrid& grid) {
    const Index n = grid.size();
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    if (grid.L == 1) return D;
    for (Index i = 0; i < n; ++i) {
        auto x = grid.coords(i);
        for (int a = 0; a < grid.d; ++a) {
            for (int e : {-1, 1}) {
                auto y = x;
                y[a] += e;
                D(i, grid.index(y)) += 1.0;
            }
        }
    }
    return D;
}

Eigen::MatrixXd dense_hamiltonian(const HamiltonianSpec& spec) {
    Eigen::MatrixXd H = dense_laplacian(spec.grid);
    H.diagonal() += spec.lambda * spec.disorder.values;
    return H;
}

void fft_inplace(const TorusGrid& grid, Eigen::VectorXcd& v, bool inverse) {
    require(v.size() == grid.size(), "vector size does not match grid");
    const int L = grid.L;
    if (L == 1) return;
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    std::vector<cplx> line(L), res(L);
    const Index n = grid.size();
    for (int a = 0; a < grid.d; ++a) {
        const Index s = grid.stride(a);
        const Index block = s * L;
        for (Index base = 0; base < n; base += block) {
            for (Index k = 0; k < s; ++k) {
                for (int j = 0; j < L; ++j) line[j] = v(base + j * s + k);
                if (inverse)
                    fft.inv(res, line);
                else
                    fft.fwd(res, line);
                for (int j = 0; j < L; ++j) v(base + j * s + k) = res[j];
            }
        }
    }
    v *= std::pow(static_cast<double>(L), -0.5 * grid.d);
}

ComplexField fft_forward(const ComplexField& field) {
    ComplexField out = field;
    fft_inplace(out.grid, out.values, false);
    return out;
}

ComplexField fft_inverse(const ComplexField& field) {
    ComplexField out = field;
    fft_inplace(out.grid, out.values, true);
    return out;
}

Eigen::VectorXcd fourier_multiply(const TorusGrid& grid, const Eigen::VectorXcd& multiplier,
                                  const Eigen::VectorXcd& psi) {
    Eigen::VectorXcd v = psi;
    fft_inplace(grid, v, false);
    v.array() *= multiplier.array();
    fft_inplace(grid, v, true);
    return v;
}

ComplexField free_propagate(const TorusGrid& grid, double t, const ComplexField& psi) {
    require(psi.grid == grid, "field grid does not match");
    if (t == 0.0) return psi;
    const Eigen::VectorXd w = dispersion_table(grid);
    const Eigen::VectorXcd m = (w.array() * cplx(0.0, -t)).exp();
    return ComplexField(grid, fourier_multiply(grid, m, psi.values));
}

}  // namespace qdiff
