#include "hsisr/diffusion/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "hsisr/core/error.hpp"

namespace hsisr::diffusion {

void DiffusionConfig::validate() const {
  if (steps < 1) throw ConfigError("diffusion.T must be >= 1");
  if (schedule == ScheduleKind::Linear) {
    if (!(beta_min > 0.0)) throw ConfigError("diffusion.beta_min must be > 0");
    if (!(beta_max < 1.0)) throw ConfigError("diffusion.beta_max must be < 1");
    if (beta_max < beta_min) throw ConfigError("diffusion.beta_max must be >= beta_min");
  }
  if (time_dim < 2 || time_dim % 2 != 0) throw ConfigError("diffusion.time_dim must be even and >= 2");
  if (widths.empty()) throw ConfigError("diffusion.widths must be non-empty");
  for (int w : widths)
    if (w < 1) throw ConfigError("diffusion.widths entries must be positive");
}

ScheduleKind parse_schedule(const std::string& name) {
  if (name == "linear") return ScheduleKind::Linear;
  if (name == "cosine") return ScheduleKind::Cosine;
  throw ConfigError("unknown diffusion schedule '" + name + "'");
}

std::string schedule_name(ScheduleKind kind) { return kind == ScheduleKind::Linear ? "linear" : "cosine"; }

NoiseSchedule build_schedule(const DiffusionConfig& cfg) {
  cfg.validate();
  const int T = cfg.steps;
  NoiseSchedule s;
  s.beta.resize(T);
  if (cfg.schedule == ScheduleKind::Linear) {
    for (int i = 0; i < T; ++i) {
      s.beta[i] = T == 1 ? cfg.beta_min : cfg.beta_min + (cfg.beta_max - cfg.beta_min) * i / (T - 1);
    }
  } else {
    constexpr double kOffset = 0.008;
    constexpr double kHalfPi = 1.57079632679489661923;
    auto f = [&](double t) {
      const double c = std::cos((t / T + kOffset) / (1.0 + kOffset) * kHalfPi);
      return c * c;
    };
    for (int i = 0; i < T; ++i) s.beta[i] = std::min(1.0 - f(i + 1.0) / f(i), 0.999);
  }
  s.alpha.resize(T);
  s.alpha_bar.resize(T);
  double prod = 1.0;
  for (int i = 0; i < T; ++i) {
    s.alpha[i] = 1.0 - s.beta[i];
    prod *= s.alpha[i];
    s.alpha_bar[i] = prod;
  }
  return s;
}

void require_timestep(const NoiseSchedule& sched, int t) {
  if (t < 1 || t > sched.steps()) {
    throw ConfigError("timestep " + std::to_string(t) + " outside [1, " + std::to_string(sched.steps()) + "]");
  }
}

}  // namespace hsisr::diffusion
