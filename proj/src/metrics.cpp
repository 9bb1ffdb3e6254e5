#include "polyrom/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <stdexcept>

namespace polyrom {

namespace {

double squared_ratio(const Matrix& ref, const Matrix& other) {
  if (ref.rows() != other.rows() || ref.cols() != other.cols())
    throw DimensionError("trajectory shapes differ");
  const double den = ref.squaredNorm();
  if (den == 0.0) throw std::domain_error("reference trajectory has zero norm");
  return (ref - other).squaredNorm() / den;
}

}  // namespace

double state_prediction_error(const Matrix& x_fom, const Matrix& x_rom) {
  return squared_ratio(x_fom, x_rom);
}

double projection_error(const Matrix& x_fom, const Matrix& phi) {
  if (phi.rows() != x_fom.rows()) throw DimensionError("basis rows do not match the trajectory");
  const double den = x_fom.squaredNorm();
  if (den == 0.0) throw std::domain_error("trajectory has zero norm");
  const double kept = (phi.transpose() * x_fom).squaredNorm();
  return std::max(0.0, (den - kept) / den);
}

double rom_evaluation_error(const Matrix& x_reference, const Matrix& x_method) {
  return squared_ratio(x_reference, x_method);
}

double TimingSamples::mean() const {
  if (seconds.empty()) return 0.0;
  return std::accumulate(seconds.begin(), seconds.end(), 0.0) / static_cast<double>(seconds.size());
}

TimingSamples time_runs(const std::function<void()>& run, int repeats) {
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  TimingSamples out;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    run();
    const auto t1 = std::chrono::steady_clock::now();
    out.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  return out;
}

SpeedupResult measure_speedup(const std::function<void()>& fom, const std::function<void()>& rom,
                              int repeats) {
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  // Interleaved so slow drifts in machine load hit both sides alike.
  SpeedupResult out;
  for (int r = 0; r < repeats; ++r) {
    out.fom.seconds.push_back(time_runs(fom, 1).seconds[0]);
    out.rom.seconds.push_back(time_runs(rom, 1).seconds[0]);
  }
  const double rom_mean = out.rom.mean();
  out.speedup = rom_mean > 0.0 ? out.fom.mean() / rom_mean : 0.0;
  return out;
}

}  // namespace polyrom
