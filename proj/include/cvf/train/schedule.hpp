#pragma once

#include <cstdint>

namespace cvf {

/// Piecewise-linear learning rate: warmup 0 -> base over the first 5% of
/// steps, decay to 0.1 * base over the next 75%, then constant.
inline double lr_at(std::uint64_t step, std::uint64_t total_steps, double base_lr) {
  if (total_steps == 0) return base_lr;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  constexpr double warm = 0.05, decay_end = 0.80, floor = 0.1;
  if (t < warm) return base_lr * t / warm;
  if (t < decay_end) return base_lr * (1.0 - (1.0 - floor) * (t - warm) / (decay_end - warm));
  return floor * base_lr;
}

}  // namespace cvf
