#pragma once

#include "polyrom/basis.hpp"

#include <functional>
#include <vector>

namespace polyrom {

/// |X - Xt|_F^2 / |X|_F^2.
double state_prediction_error(const Matrix& x_fom, const Matrix& x_rom);

/// |(I - Phi Phi^T) X|_F^2 / |X|_F^2 via (|X|^2 - |Phi^T X|^2) / |X|^2, clamped at 0.
double projection_error(const Matrix& x_fom, const Matrix& phi);

/// |X_ref - Xt|_F^2 / |X_ref|_F^2 against a reference ROM trajectory.
double rom_evaluation_error(const Matrix& x_reference, const Matrix& x_method);

struct TimingSamples {
  std::vector<double> seconds;
  double mean() const;
};

/// Wall-clock of `repeats` calls; exceptions from `run` propagate.
TimingSamples time_runs(const std::function<void()>& run, int repeats);

struct SpeedupResult {
  TimingSamples fom;
  TimingSamples rom;
  double speedup = 0.0;  // mean fom / mean rom
};

SpeedupResult measure_speedup(const std::function<void()>& fom, const std::function<void()>& rom,
                              int repeats);

}  // namespace polyrom
