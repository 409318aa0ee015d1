#include "sparsetemp/snsoftmax.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "sparsetemp/logging.hpp"

namespace sparsetemp {

namespace {
constexpr double kMaxScale = 1e6;
}

double SoftmaxPolicy::scale_for(double t) const {
    switch (mode) {
        case SoftmaxMode::Plain:
            return 1.0;
        case SoftmaxMode::SnFixedS:
            return s;
        case SoftmaxMode::SnStConst: {
            if (t <= 0.0) throw std::invalid_argument("scale_for: temperature must be positive");
            // s*t held constant; clamp so bookkeeping never overflows.
            return std::min(std::max(st_const / t, 1.0), kMaxScale);
        }
    }
    return 1.0;
}

TemperedDistribution SoftmaxPolicy::forward(const Vec& logits, double t) const {
    const double scale = scale_for(t);
    if (scale > 1.0) return sn_forward(logits, t, scale);
    TemperedDistribution dist;
    dist.beta = softmax_t(logits, t);
    dist.beta_noisy = dist.beta;
    dist.t = t;
    dist.s = 1.0;
    return dist;
}

SoftmaxMode softmax_mode_from_string(const std::string& name) {
    if (name == "plain") return SoftmaxMode::Plain;
    if (name == "sn_fixed_s") return SoftmaxMode::SnFixedS;
    if (name == "sn_st_const") return SoftmaxMode::SnStConst;
    throw std::invalid_argument("unknown softmax mode: " + name);
}

const char* to_string(SoftmaxMode mode) {
    switch (mode) {
        case SoftmaxMode::Plain: return "plain";
        case SoftmaxMode::SnFixedS: return "sn_fixed_s";
        case SoftmaxMode::SnStConst: return "sn_st_const";
    }
    return "?";
}

Vec softmax_t(const Vec& logits, double t) {
    if (logits.empty()) throw std::invalid_argument("softmax_t: empty logit vector");
    if (!(t > 0.0)) throw std::invalid_argument("softmax_t: temperature must be positive");
    for (double a : logits) {
        if (!std::isfinite(a)) throw std::invalid_argument("softmax_t: non-finite logit");
    }
    double zmax = logits[0] / t;
    for (double a : logits) zmax = std::max(zmax, a / t);
    Vec out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] / t - zmax);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
    return out;
}

Mat softmax_jacobian(const Vec& beta, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("softmax_jacobian: temperature must be positive");
    const std::size_t m = beta.size();
    Mat jac(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double val = (i == j) ? beta[i] - beta[i] * beta[i] : -beta[i] * beta[j];
            jac(i, j) = val / t;
        }
    }
    return jac;
}

TemperedDistribution sn_forward(const Vec& logits, double t, double s) {
    if (!(s > 1.0)) throw std::invalid_argument("sn_forward: scaling factor must exceed 1");
    TemperedDistribution dist;
    dist.beta = softmax_t(logits, t);
    dist.beta_noisy = softmax_t(logits, s * t);
    dist.t = t;
    dist.s = s;
    return dist;
}

Vec sn_backward(const TemperedDistribution& dist, const Vec& upstream) {
    if (upstream.size() != dist.beta.size())
        throw std::invalid_argument("sn_backward: upstream length mismatch");
    // Two separately computed terms summed, so dropping the noise term
    // recovers the plain backward bit-for-bit.
    Vec out = matvec(softmax_jacobian(dist.beta, dist.t), upstream);
    if (dist.s > 1.0) {
        const Vec noise = matvec(softmax_jacobian(dist.beta_noisy, dist.s * dist.t), upstream);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += noise[i];
    }
    return out;
}

std::vector<GradNormRow> grad_norm_probe(const Vec& logits, const std::vector<double>& t_grid,
                                         const SoftmaxPolicy& policy) {
    if (t_grid.empty()) throw std::invalid_argument("grad_norm_probe: empty temperature grid");
    // Fixed unit upstream; alternating signs so it is not annihilated by the
    // row-sum-zero property.
    Vec g(logits.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (i % 2 == 0) ? 1.0 : -1.0;
    const double gn = norm2(g);
    for (double& x : g) x /= gn;

    std::vector<GradNormRow> rows;
    rows.reserve(t_grid.size());
    for (double t : t_grid) {
        const Vec beta = softmax_t(logits, t);
        const Vec plain = matvec(softmax_jacobian(beta, t), g);
        TemperedDistribution dist = policy.forward(logits, t);
        const Vec sn = sn_backward(dist, g);
        rows.push_back({t, norm2(plain), norm2(sn)});
    }
    return rows;
}

void write_grad_norm_csv(std::ostream& os, const std::vector<GradNormRow>& rows) {
    os << "t,plain_norm,sn_norm\n";
    for (const auto& r : rows) {
        os << format_double(r.t) << ',' << format_double(r.plain_norm) << ','
           << format_double(r.sn_norm) << '\n';
    }
}

}  // namespace sparsetemp
