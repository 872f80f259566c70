#pragma once

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <vector>

namespace tweezer {

using cplx = std::complex<double>;

class SpatialGrid;
using GridPtr = std::shared_ptr<const SpatialGrid>;

/// Uniform periodic 1D grid x_j = x_min + j dx, j = 0..n-1, with its conjugate
/// wavenumber grid in FFT ("wraparound") order: 0, dk, ..., (n/2-1) dk, -n/2 dk, ..., -dk.
/// Immutable after construction; owns the FFT plans used by every wavefunction on it.
class SpatialGrid {
 public:
  SpatialGrid(double x_min, double x_max, int n_points);
  ~SpatialGrid();
  SpatialGrid(const SpatialGrid&) = delete;
  SpatialGrid& operator=(const SpatialGrid&) = delete;

  [[nodiscard]] double x_min() const { return x_min_; }
  [[nodiscard]] double x_max() const { return x_max_; }
  [[nodiscard]] int size() const { return n_; }
  [[nodiscard]] double dx() const { return dx_; }
  [[nodiscard]] double dk() const;
  [[nodiscard]] double extent() const { return x_max_ - x_min_; }
  [[nodiscard]] const Eigen::VectorXd& positions() const { return x_; }
  [[nodiscard]] const Eigen::VectorXd& wavenumbers() const { return k_; }
  [[nodiscard]] double position(int j) const { return x_min_ + j * dx_; }
  /// Index of the grid point closest to x (clamped to the grid).
  [[nodiscard]] int nearest_index(double x) const;

  /// Unnormalized in-place-capable DFT pair on n contiguous amplitudes.
  /// Safe to call concurrently from several threads on distinct buffers.
  void forward(const cplx* in, cplx* out) const;
  void backward(const cplx* in, cplx* out) const;

  [[nodiscard]] bool same_as(const SpatialGrid& other) const;

 private:
  double x_min_;
  double x_max_;
  int n_;
  double dx_;
  Eigen::VectorXd x_;
  Eigen::VectorXd k_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

/// Validates and builds a grid. n_points must be even and at least 16.
GridPtr make_grid(double x_min, double x_max, int n_points);

/// Complex amplitudes psi(x_j) on a grid; the physical norm is dx * sum |psi|^2.
class WaveFunction {
 public:
  WaveFunction() = default;
  explicit WaveFunction(GridPtr grid);
  WaveFunction(GridPtr grid, Eigen::VectorXcd amplitudes);

  [[nodiscard]] const SpatialGrid& grid() const { return *grid_; }
  [[nodiscard]] const GridPtr& grid_ptr() const { return grid_; }
  [[nodiscard]] const Eigen::VectorXcd& amplitudes() const { return psi_; }
  [[nodiscard]] Eigen::VectorXcd& amplitudes() { return psi_; }
  [[nodiscard]] int size() const { return static_cast<int>(psi_.size()); }

  [[nodiscard]] double norm() const;
  void normalize();

 private:
  GridPtr grid_;
  Eigen::VectorXcd psi_;
};

/// Momentum-space amplitudes phi(k_j) = dx / sqrt(2 pi) * sum_m psi(x_m) exp(-i k_j x_m),
/// the discretized continuous Fourier transform. Normalized so that dk * sum |phi|^2
/// equals the position-space norm.
Eigen::VectorXcd to_momentum(const WaveFunction& psi);
WaveFunction from_momentum(const GridPtr& grid, const Eigen::VectorXcd& phi);
double momentum_norm(const SpatialGrid& grid, const Eigen::VectorXcd& phi);

/// dx * sum conj(psi) phi. Throws DimensionError if the grids differ.
cplx inner_product(const WaveFunction& psi, const WaveFunction& phi);

}  // namespace tweezer
