#pragma once

#include <span>
#include <string>
#include <vector>

namespace sparsetemp {

enum class ScheduleKind { Fixed, Lts, Ets, Pcd, Edd };

ScheduleKind schedule_kind_from_string(const std::string& name);
const char* to_string(ScheduleKind kind);

// Mean of max(a, 0) over all architecture parameters. If no entry is positive,
// falls back to the analytic value for N(0, init_scale^2) init:
// init_scale / sqrt(2*pi).
double estimate_E_a(std::span<const double> params, double init_scale = 1e-3);

// exp(E_a / t); the image of a temperature in exponential space.
double to_exp_space(double E_a, double t);

// E_a / ln(t_exp); inverse of to_exp_space, defined for t_exp > 1.
double from_exp_space(double E_a, double t_exp);

struct ScheduleList {
    std::vector<double> points_exp;
    std::vector<double> temps;
    double E_a = 0.0;
    double t0 = 0.0;
    double tN = 0.0;
    int N = 0;
};

// Equidistant ascent in exponential space from exp(E_a/t0) to exp(E_a/tN),
// temperatures recovered via from_exp_space.
ScheduleList ets_build(double E_a, double t0, double tN, int N);

// Equidistant descent in plain temperature space; points_exp kept for reporting.
ScheduleList lts_build(double E_a, double t0, double tN, int N);

// The ETS list repeated `cycles` times, temperature resetting to t0 each cycle.
ScheduleList pcd_build(double E_a, double t0, double tN, int N, int cycles);

// d^(k) = lambda * (1 - rho) * mean_entropy + rho * d^(k-1)
double edd_update_decay(double d_prev, double mean_entropy, double lambda, double rho);

// t^(k) = E_a / ln(t0_exp + k * d_k); requires t0_exp + k * d_k > 1.
double edd_temperature(double E_a, double t0_exp, int k, double d_k);

struct ScheduleConfig {
    ScheduleKind kind = ScheduleKind::Edd;
    double t0 = 1.0;
    double tN = 1e-3;
    int N = 4;
    int cycles = 3;
    double lambda = 0.06;
    double rho = 0.5;
    int warmup = 5;
    bool refresh_E_a = false;
};

// Mutable schedule state carried across epochs by the training driver.
struct TemperatureState {
    double t = 1.0;
    double t_raw = 1.0;  // pre-clamp value, logged only
    double t_exp = 1.0;  // exp(E_a / t)
    double d_exp = 0.0;
    int epoch_k = 0;  // EDD update count (post-warmup epochs completed)
    double E_a = 0.0;
    ScheduleKind kind = ScheduleKind::Fixed;
};

// Drives the per-epoch temperature. List kinds (LTS/ETS/PCD) map their entries
// uniformly over post-warmup epochs, piecewise-constant; EDD updates after each
// post-warmup epoch. Emitted temperature is clamped non-increasing except for
// PCD's cycle resets.
class TemperatureController {
  public:
    TemperatureController(const ScheduleConfig& config, double E_a, int total_epochs);

    // Temperature to use while training epoch `epoch` (0-based).
    double temperature_for_epoch(int epoch) const;

    // Called after epoch `epoch` finished; mean_entropy is E(H(beta)) over edges.
    // Advances EDD state (no-op for other kinds / during warmup).
    void on_epoch_end(int epoch, double mean_entropy);

    // Re-estimate E(a) each epoch when enabled; keeps t0_exp anchored at init.
    void refresh_E_a(double new_E_a);

    const TemperatureState& state() const { return state_; }
    const ScheduleConfig& config() const { return config_; }

  private:
    ScheduleConfig config_;
    TemperatureState state_;
    ScheduleList list_;  // prebuilt for LTS/ETS/PCD
    double t0_exp_ = 1.0;
    int total_epochs_ = 0;
    double last_emitted_ = 0.0;
};

}  // namespace sparsetemp
