#pragma once

#include <string>
#include <vector>

namespace hsisr::diffusion {

enum class ScheduleKind { Linear, Cosine };

struct DiffusionConfig {
  int steps = 100;  // T
  ScheduleKind schedule = ScheduleKind::Linear;
  // Linear betas. The usual [1e-4, 0.02] range for T = 1000 rescaled by 1000/T.
  double beta_min = 1e-3;
  double beta_max = 0.2;
  int time_dim = 32;
  std::vector<int> widths{32, 64};

  void validate() const;
};

ScheduleKind parse_schedule(const std::string& name);
std::string schedule_name(ScheduleKind kind);

// Per-timestep coefficients, index t - 1 for t = 1..T.
struct NoiseSchedule {
  std::vector<double> beta;
  std::vector<double> alpha;      // 1 - beta
  std::vector<double> alpha_bar;  // cumulative product of alpha

  int steps() const { return static_cast<int>(beta.size()); }
  double beta_at(int t) const { return beta[t - 1]; }
  double alpha_at(int t) const { return alpha[t - 1]; }
  double alpha_bar_at(int t) const { return alpha_bar[t - 1]; }
};

NoiseSchedule build_schedule(const DiffusionConfig& cfg);
// Throws ConfigError for t outside [1, T].
void require_timestep(const NoiseSchedule& sched, int t);

}  // namespace hsisr::diffusion
