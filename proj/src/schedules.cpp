#include "sparsetemp/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sparsetemp/logging.hpp"

namespace sparsetemp {

ScheduleKind schedule_kind_from_string(const std::string& name) {
    if (name == "fixed") return ScheduleKind::Fixed;
    if (name == "lts") return ScheduleKind::Lts;
    if (name == "ets") return ScheduleKind::Ets;
    if (name == "pcd") return ScheduleKind::Pcd;
    if (name == "edd") return ScheduleKind::Edd;
    throw std::invalid_argument("unknown schedule kind: " + name);
}

const char* to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::Fixed: return "fixed";
        case ScheduleKind::Lts: return "lts";
        case ScheduleKind::Ets: return "ets";
        case ScheduleKind::Pcd: return "pcd";
        case ScheduleKind::Edd: return "edd";
    }
    return "?";
}

double estimate_E_a(std::span<const double> params, double init_scale) {
    if (params.empty()) throw std::invalid_argument("estimate_E_a: empty parameter list");
    double sum = 0.0;
    bool any_positive = false;
    for (double a : params) {
        if (a > 0.0) {
            sum += a;
            any_positive = true;
        }
    }
    if (!any_positive) {
        // E[max(a,0)] for a ~ N(0, init_scale^2) is init_scale / sqrt(2*pi).
        return init_scale / std::sqrt(2.0 * std::numbers::pi);
    }
    return sum / static_cast<double>(params.size());
}

double to_exp_space(double E_a, double t) {
    if (!(E_a > 0.0)) throw std::invalid_argument("to_exp_space: E_a must be positive");
    if (!(t > 0.0)) throw std::invalid_argument("to_exp_space: temperature must be positive");
    return std::exp(E_a / t);
}

double from_exp_space(double E_a, double t_exp) {
    if (!(E_a > 0.0)) throw std::invalid_argument("from_exp_space: E_a must be positive");
    if (!(t_exp > 1.0)) throw std::invalid_argument("from_exp_space: t_exp must exceed 1");
    return E_a / std::log(t_exp);
}

ScheduleList ets_build(double E_a, double t0, double tN, int N) {
    if (!(t0 > tN) || !(tN > 0.0))
        throw std::invalid_argument("ets_build: requires t0 > tN > 0");
    if (N < 1) throw std::invalid_argument("ets_build: N must be at least 1");
    ScheduleList list;
    list.E_a = E_a;
    list.t0 = t0;
    list.tN = tN;
    list.N = N;
    const double lo = to_exp_space(E_a, t0);
    const double hi = to_exp_space(E_a, tN);
    const double d_exp = (hi - lo) / N;
    for (int n = 0; n <= N; ++n) {
        const double point = lo + n * d_exp;
        list.points_exp.push_back(point);
        list.temps.push_back(from_exp_space(E_a, point));
    }
    return list;
}

ScheduleList lts_build(double E_a, double t0, double tN, int N) {
    if (!(t0 > tN) || !(tN > 0.0))
        throw std::invalid_argument("lts_build: requires t0 > tN > 0");
    if (N < 1) throw std::invalid_argument("lts_build: N must be at least 1");
    ScheduleList list;
    list.E_a = E_a;
    list.t0 = t0;
    list.tN = tN;
    list.N = N;
    const double step = (tN - t0) / N;
    for (int n = 0; n <= N; ++n) {
        const double t = (n == N) ? tN : t0 + n * step;
        list.temps.push_back(t);
        list.points_exp.push_back(to_exp_space(E_a, t));
    }
    return list;
}

ScheduleList pcd_build(double E_a, double t0, double tN, int N, int cycles) {
    if (cycles < 1) throw std::invalid_argument("pcd_build: cycles must be at least 1");
    ScheduleList one = ets_build(E_a, t0, tN, N);
    ScheduleList list;
    list.E_a = E_a;
    list.t0 = t0;
    list.tN = tN;
    list.N = N;
    for (int c = 0; c < cycles; ++c) {
        list.points_exp.insert(list.points_exp.end(), one.points_exp.begin(),
                               one.points_exp.end());
        list.temps.insert(list.temps.end(), one.temps.begin(), one.temps.end());
    }
    return list;
}

double edd_update_decay(double d_prev, double mean_entropy, double lambda, double rho) {
    if (mean_entropy < 0.0) throw std::invalid_argument("edd_update_decay: negative entropy");
    if (d_prev < 0.0) throw std::invalid_argument("edd_update_decay: negative previous decay");
    return lambda * (1.0 - rho) * mean_entropy + rho * d_prev;
}

double edd_temperature(double E_a, double t0_exp, int k, double d_k) {
    const double arg = t0_exp + static_cast<double>(k) * d_k;
    if (!(arg > 1.0)) throw std::invalid_argument("edd_temperature: ln argument must exceed 1");
    return E_a / std::log(arg);
}

TemperatureController::TemperatureController(const ScheduleConfig& config, double E_a,
                                             int total_epochs)
    : config_(config), total_epochs_(total_epochs) {
    state_.kind = config.kind;
    state_.E_a = E_a;
    state_.t = config.t0;
    state_.t_raw = config.t0;
    state_.d_exp = 0.0;  // d^(0) = 0
    state_.epoch_k = 0;
    t0_exp_ = to_exp_space(E_a, config.t0);
    state_.t_exp = t0_exp_;
    last_emitted_ = config.t0;
    switch (config.kind) {
        case ScheduleKind::Lts:
            list_ = lts_build(E_a, config.t0, config.tN, config.N);
            break;
        case ScheduleKind::Ets:
            list_ = ets_build(E_a, config.t0, config.tN, config.N);
            break;
        case ScheduleKind::Pcd:
            list_ = pcd_build(E_a, config.t0, config.tN, config.N, config.cycles);
            break;
        default:
            break;
    }
}

double TemperatureController::temperature_for_epoch(int epoch) const {
    if (epoch < config_.warmup) return config_.t0;
    switch (config_.kind) {
        case ScheduleKind::Fixed:
            return config_.t0;
        case ScheduleKind::Edd:
            return state_.t;
        case ScheduleKind::Lts:
        case ScheduleKind::Ets:
        case ScheduleKind::Pcd: {
            const int post = total_epochs_ - config_.warmup;
            if (post <= 0) return config_.t0;
            const long long len = static_cast<long long>(list_.temps.size());
            long long idx = static_cast<long long>(epoch - config_.warmup) * len / post;
            idx = std::min(idx, len - 1);
            return list_.temps[static_cast<std::size_t>(idx)];
        }
    }
    return config_.t0;
}

void TemperatureController::on_epoch_end(int epoch, double mean_entropy) {
    if (epoch < config_.warmup) return;
    if (config_.kind == ScheduleKind::Edd) {
        state_.d_exp = edd_update_decay(state_.d_exp, mean_entropy, config_.lambda, config_.rho);
        state_.epoch_k += 1;
        const double arg = t0_exp_ + static_cast<double>(state_.epoch_k) * state_.d_exp;
        if (arg > 1.0) {
            state_.t_raw = edd_temperature(state_.E_a, t0_exp_, state_.epoch_k, state_.d_exp);
            // Eq. 15 with k * d^(k) is not provably monotone; clamp so emitted
            // temperatures never rise.
            const double clamped = std::min(state_.t_raw, state_.t);
            if (clamped < state_.t_raw) {
                log_debug("edd: clamped t_raw " + format_double(state_.t_raw) + " to " +
                          format_double(clamped));
            }
            state_.t = clamped;
        }
    } else {
        state_.t_raw = temperature_for_epoch(epoch + 1);
        state_.t = state_.t_raw;
        state_.epoch_k += 1;
    }
    state_.t_exp = to_exp_space(state_.E_a, state_.t);
    last_emitted_ = state_.t;
}

void TemperatureController::refresh_E_a(double new_E_a) {
    if (!config_.refresh_E_a) return;
    if (new_E_a > 0.0) state_.E_a = new_E_a;  // t0_exp stays anchored at the init estimate
}

}  // namespace sparsetemp
