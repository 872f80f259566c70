#include "tweezer/grid.hpp"

#include "tweezer/error.hpp"
#include "fftw_util.hpp"
#include "tweezer/units.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <string>

namespace tweezer {

namespace detail {
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

namespace {
std::mutex& planner_mutex() { return detail::fftw_planner_mutex(); }

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }
fftw_complex* as_fftw(const cplx* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<cplx*>(p));
}
}  // namespace

struct SpatialGrid::Plans {
  // aligned plans for buffers sharing the planning alignment, unaligned fallback otherwise
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  fftw_plan fwd_any = nullptr;
  fftw_plan bwd_any = nullptr;
  int alignment = 0;

  [[nodiscard]] bool aligned(const cplx* in, const cplx* out) const {
    return fftw_alignment_of(const_cast<double*>(reinterpret_cast<const double*>(in))) == alignment &&
           fftw_alignment_of(const_cast<double*>(reinterpret_cast<const double*>(out))) == alignment;
  }
};

SpatialGrid::SpatialGrid(double x_min, double x_max, int n_points)
    : x_min_(x_min), x_max_(x_max), n_(n_points), dx_((x_max - x_min) / n_points),
      x_(n_points), k_(n_points), plans_(std::make_unique<Plans>()) {
  for (int j = 0; j < n_; ++j) x_[j] = x_min_ + j * dx_;
  const double dk = 2.0 * constants::pi / (x_max_ - x_min_);
  for (int j = 0; j < n_; ++j) k_[j] = (j < n_ / 2 ? j : j - n_) * dk;

  // FFTW_ESTIMATE keeps plan selection, and therefore round-off, reproducible run to run.
  // Eigen vectors share this alignment, so the aligned plans are the common path.
  Eigen::VectorXcd scratch_in(n_), scratch_out(n_);
  std::lock_guard lock(planner_mutex());
  auto* in = as_fftw(scratch_in.data());
  auto* out = as_fftw(scratch_out.data());
  plans_->alignment = fftw_alignment_of(reinterpret_cast<double*>(scratch_in.data()));
  plans_->fwd = fftw_plan_dft_1d(n_, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
  plans_->bwd = fftw_plan_dft_1d(n_, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
  plans_->fwd_any = fftw_plan_dft_1d(n_, in, out, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->bwd_any = fftw_plan_dft_1d(n_, in, out, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plans_->fwd || !plans_->bwd || !plans_->fwd_any || !plans_->bwd_any)
    throw NumericalError("FFTW failed to create a plan for n = " + std::to_string(n_));
}

SpatialGrid::~SpatialGrid() {
  std::lock_guard lock(planner_mutex());
  for (auto* p : {&plans_->fwd, &plans_->bwd, &plans_->fwd_any, &plans_->bwd_any})
    if (*p) fftw_destroy_plan(*p);
}

double SpatialGrid::dk() const { return 2.0 * constants::pi / (x_max_ - x_min_); }

int SpatialGrid::nearest_index(double x) const {
  const auto j = static_cast<long>(std::lround((x - x_min_) / dx_));
  return static_cast<int>(std::clamp<long>(j, 0, n_ - 1));
}

void SpatialGrid::forward(const cplx* in, cplx* out) const {
  fftw_execute_dft(plans_->aligned(in, out) ? plans_->fwd : plans_->fwd_any, as_fftw(in), as_fftw(out));
}

void SpatialGrid::backward(const cplx* in, cplx* out) const {
  fftw_execute_dft(plans_->aligned(in, out) ? plans_->bwd : plans_->bwd_any, as_fftw(in), as_fftw(out));
}

bool SpatialGrid::same_as(const SpatialGrid& other) const {
  return this == &other ||
         (n_ == other.n_ && x_min_ == other.x_min_ && x_max_ == other.x_max_);
}

GridPtr make_grid(double x_min, double x_max, int n_points) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max))
    throw ConfigError("grid bounds must be finite");
  if (!(x_max > x_min)) throw ConfigError("grid requires x_max > x_min");
  if (n_points < 16) throw ConfigError("grid requires at least 16 points");
  if (n_points % 2 != 0)
    throw ConfigError("grid point count must be even, got " + std::to_string(n_points));
  return std::make_shared<const SpatialGrid>(x_min, x_max, n_points);
}

WaveFunction::WaveFunction(GridPtr grid)
    : grid_(std::move(grid)), psi_(Eigen::VectorXcd::Zero(grid_->size())) {}

WaveFunction::WaveFunction(GridPtr grid, Eigen::VectorXcd amplitudes)
    : grid_(std::move(grid)), psi_(std::move(amplitudes)) {
  if (psi_.size() != grid_->size())
    throw DimensionError("amplitude vector length does not match grid size");
}

double WaveFunction::norm() const { return grid_->dx() * psi_.squaredNorm(); }

void WaveFunction::normalize() {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("cannot normalize a null wavefunction");
  psi_ /= std::sqrt(n);
}

Eigen::VectorXcd to_momentum(const WaveFunction& psi) {
  const auto& g = psi.grid();
  Eigen::VectorXcd phi(g.size());
  g.forward(psi.amplitudes().data(), phi.data());
  const double scale = g.dx() / std::sqrt(2.0 * constants::pi);
  const auto& k = g.wavenumbers();
  for (int j = 0; j < g.size(); ++j) phi[j] *= scale * std::polar(1.0, -k[j] * g.x_min());
  return phi;
}

WaveFunction from_momentum(const GridPtr& grid, const Eigen::VectorXcd& phi) {
  if (phi.size() != grid->size())
    throw DimensionError("momentum vector length does not match grid size");
  const auto& k = grid->wavenumbers();
  Eigen::VectorXcd tmp(grid->size());
  const double scale = std::sqrt(2.0 * constants::pi) / (grid->dx() * grid->size());
  for (int j = 0; j < grid->size(); ++j) tmp[j] = phi[j] * scale * std::polar(1.0, k[j] * grid->x_min());
  WaveFunction out(grid);
  grid->backward(tmp.data(), out.amplitudes().data());
  return out;
}

double momentum_norm(const SpatialGrid& grid, const Eigen::VectorXcd& phi) {
  return grid.dk() * phi.squaredNorm();
}

cplx inner_product(const WaveFunction& psi, const WaveFunction& phi) {
  if (!psi.grid().same_as(phi.grid()))
    throw DimensionError("inner product of wavefunctions on different grids");
  return psi.grid().dx() * psi.amplitudes().dot(phi.amplitudes());
}

}  // namespace tweezer
