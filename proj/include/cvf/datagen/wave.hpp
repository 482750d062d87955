#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cvf/datagen/dataset.hpp"
#include "cvf/error.hpp"
#include "cvf/rng.hpp"

namespace cvf {

/// Largest stable Courant number of the 2D five-point leapfrog scheme.
inline const double kWaveCflLimit = 1.0 / std::sqrt(2.0);

struct WaveConfig {
  std::size_t n = 64;
  double length = 1.0;
  double c = 0.5;
  double dt = 0.01;
  std::size_t n_steps = 100;
  std::size_t n_traj = 1;
  std::size_t n_packets = 1;
  double sigma_min = 0.05;  // fraction of length
  double sigma_max = 0.15;
  double amplitude = 1.0;
  std::uint64_t seed = 0;

  double dx() const { return length / static_cast<double>(n); }
  double courant() const { return c * dt / dx(); }

  void validate() const {
    if (n < 3) throw ValidationError("wave grid needs at least 3 points per side");
    if (!(length > 0.0) || !(c > 0.0) || !(dt > 0.0)) throw ValidationError("wave length, speed and dt must be positive");
    if (n_steps < 2) throw ValidationError("wave run needs at least 2 steps");
    if (n_traj == 0) throw ValidationError("wave run needs at least one trajectory");
    if (n_packets < 1 || n_packets > 3) throw ValidationError("n_packets must be 1, 2 or 3");
    if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min)) throw ValidationError("packet width range is invalid");
    if (!(courant() < kWaveCflLimit)) {
      std::ostringstream os;
      os << "CFL violated: c*dt/dx = " << courant() << " must be below 1/sqrt(2) (dt < "
         << kWaveCflLimit * dx() / c << ")";
      throw ValidationError(os.str());
    }
  }
};

namespace detail {

inline std::size_t grid_side(std::size_t count) {
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(count))));
  if (n * n != count || n == 0) throw ShapeError("field is not a square grid: " + std::to_string(count) + " values");
  return n;
}

}  // namespace detail

/// Five-point Laplacian with periodic wraparound on an n x n row-major grid.
inline std::vector<double> laplacian_periodic(std::span<const double> u, double dx) {
  const std::size_t n = detail::grid_side(u.size());
  const double inv = 1.0 / (dx * dx);
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ip = (i + 1) % n, im = (i + n - 1) % n;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t jp = (j + 1) % n, jm = (j + n - 1) % n;
      out[i * n + j] = (u[ip * n + j] + u[im * n + j] + u[i * n + jp] + u[i * n + jm] - 4.0 * u[i * n + j]) * inv;
    }
  }
  return out;
}

enum class CflCheck { enforce, skip };

/// Leapfrog update u^{n+1} = 2u^n - u^{n-1} + (c dt)^2 lap(u^n).
inline std::vector<double> wave_step(std::span<const double> u_prev, std::span<const double> u_curr, double c, double dt,
                                     double dx, CflCheck check = CflCheck::enforce) {
  if (u_prev.size() != u_curr.size()) throw ShapeError("wave_step grids differ in size");
  if (check == CflCheck::enforce && !(c * dt / dx < kWaveCflLimit))
    throw ValidationError("CFL violated: c*dt/dx = " + std::to_string(c * dt / dx));
  const auto lap = laplacian_periodic(u_curr, dx);
  const double k = (c * dt) * (c * dt);
  std::vector<double> next(u_curr.size());
  for (std::size_t i = 0; i < next.size(); ++i) next[i] = 2.0 * u_curr[i] - u_prev[i] + k * lap[i];
  return next;
}

/// First leapfrog step for zero initial velocity: u^1 = u^0 + (c dt)^2/2 lap(u^0).
inline std::vector<double> wave_bootstrap(std::span<const double> u0, double c, double dt, double dx) {
  const auto lap = laplacian_periodic(u0, dx);
  const double k = 0.5 * (c * dt) * (c * dt);
  std::vector<double> u1(u0.size());
  for (std::size_t i = 0; i < u1.size(); ++i) u1[i] = u0[i] + k * lap[i];
  return u1;
}

/// Discrete energy sum(v^2 + c^2 |grad u|^2) dx^2 with forward-difference gradients.
inline double wave_energy(std::span<const double> u, std::span<const double> v, double c, double dx) {
  const std::size_t n = detail::grid_side(u.size());
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double gx = (u[((i + 1) % n) * n + j] - u[i * n + j]) / dx;
      const double gy = (u[i * n + (j + 1) % n] - u[i * n + j]) / dx;
      e += v[i * n + j] * v[i * n + j] + c * c * (gx * gx + gy * gy);
    }
  return e * dx * dx;
}

/// Sum of Gaussian packets, distances measured with the periodic minimum image.
inline std::vector<double> gaussian_packets(const WaveConfig& cfg, Rng& rng) {
  const std::size_t n = cfg.n;
  const double L = cfg.length;
  const double dx = cfg.dx();
  std::vector<double> u(n * n, 0.0);
  for (std::size_t p = 0; p < cfg.n_packets; ++p) {
    const double x0 = rng.uniform(0.0, L);
    const double y0 = rng.uniform(0.0, L);
    const double sigma = L * rng.uniform(cfg.sigma_min, cfg.sigma_max);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t i = 0; i < n; ++i) {
      double ddx = static_cast<double>(i) * dx - x0;
      ddx -= L * std::round(ddx / L);
      for (std::size_t j = 0; j < n; ++j) {
        double ddy = static_cast<double>(j) * dx - y0;
        ddy -= L * std::round(ddy / L);
        u[i * n + j] += cfg.amplitude * std::exp(-(ddx * ddx + ddy * ddy) * inv);
      }
    }
  }
  return u;
}

/// Wave-equation trajectories with channels (u, v) on an n x n periodic grid.
///
/// v is the central difference (u^{k+1} - u^{k-1}) / (2 dt); the first and last
/// frames use one-sided differences.
inline TrajectoryDataset generate_wave2d(const WaveConfig& cfg) {
  cfg.validate();
  TrajectoryDataset d;
  d.n_traj = cfg.n_traj;
  d.n_steps = cfg.n_steps;
  d.channels = 2;
  d.spatial = {cfg.n, cfg.n};
  d.base_dt = cfg.dt;
  d.labels = {"u", "v"};
  for (std::size_t k = 0; k < cfg.n_steps; ++k) d.times.push_back(static_cast<double>(k) * cfg.dt);
  std::ostringstream meta;
  meta.precision(17);
  meta << "generator=wave2d\nn=" << cfg.n << "\nlength=" << cfg.length << "\nc=" << cfg.c << "\ndt=" << cfg.dt
       << "\ncourant=" << cfg.courant() << "\nn_packets=" << cfg.n_packets << "\nseed=" << cfg.seed << "\n";
  d.metadata = meta.str();
  d.allocate();

  const std::size_t cells = cfg.n * cfg.n;
  const double dx = cfg.dx();
  const Rng root(cfg.seed);
  for (std::size_t t = 0; t < cfg.n_traj; ++t) {
    Rng rng = root.fork(t);
    std::vector<std::vector<double>> frames;
    frames.reserve(cfg.n_steps);
    frames.push_back(gaussian_packets(cfg, rng));
    frames.push_back(wave_bootstrap(frames[0], cfg.c, cfg.dt, dx));
    while (frames.size() < cfg.n_steps)
      frames.push_back(wave_step(frames[frames.size() - 2], frames.back(), cfg.c, cfg.dt, dx));

    for (std::size_t k = 0; k < cfg.n_steps; ++k) {
      auto s = d.state(t, k);
      for (std::size_t i = 0; i < cells; ++i) {
        s[i] = frames[k][i];
        double v;
        if (k == 0)
          v = (frames[1][i] - frames[0][i]) / cfg.dt;
        else if (k + 1 == cfg.n_steps)
          v = (frames[k][i] - frames[k - 1][i]) / cfg.dt;
        else
          v = (frames[k + 1][i] - frames[k - 1][i]) / (2.0 * cfg.dt);
        s[cells + i] = v;
      }
    }
  }
  return d;
}

}  // namespace cvf
