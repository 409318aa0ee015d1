#pragma once

#include <iosfwd>
#include <vector>

#include "sparsetemp/linalg.hpp"

namespace sparsetemp {

// Forward/backward state of one temperature-annealed softmax evaluation.
// beta is the distribution actually emitted at temperature t; beta_noisy is the
// smoother distribution at temperature s*t cached for the backward pass.
// The noisy backward term is active iff s > 1.
struct TemperedDistribution {
    Vec beta;
    Vec beta_noisy;
    double t = 1.0;
    double s = 1.0;
};

enum class SoftmaxMode { Plain, SnFixedS, SnStConst };

// Which scaling factor to use for the noisy backward term.
//   Plain:     s = 1, backward is the ordinary softmax Jacobian.
//   SnFixedS:  s fixed (default 100).
//   SnStConst: s*t held constant (default 1), s = st_const / t, clamped to [1, 1e6].
struct SoftmaxPolicy {
    SoftmaxMode mode = SoftmaxMode::SnStConst;
    double s = 100.0;
    double st_const = 1.0;

    double scale_for(double t) const;
    TemperedDistribution forward(const Vec& logits, double t) const;
};

SoftmaxMode softmax_mode_from_string(const std::string& name);
const char* to_string(SoftmaxMode mode);

// softmax(A / t), max-subtraction stabilized. Throws std::invalid_argument on
// t <= 0 or non-finite logits.
Vec softmax_t(const Vec& logits, double t);

// (diag(beta) - beta beta^T) / t. Symmetric, rows sum to zero.
Mat softmax_jacobian(const Vec& beta, double t);

// Forward pass of sparse-noisy softmax: emit beta at temperature t, cache
// beta_noisy at temperature s*t for the backward pass. Requires s > 1.
TemperedDistribution sn_forward(const Vec& logits, double t, double s);

// dL/dA = J_t * upstream + [s > 1] J_{st} * upstream.
Vec sn_backward(const TemperedDistribution& dist, const Vec& upstream);

struct GradNormRow {
    double t;
    double plain_norm;
    double sn_norm;
};

// For each grid temperature, norms of the plain and sparse-noisy backward
// outputs for a fixed alternating-sign unit upstream vector.
std::vector<GradNormRow> grad_norm_probe(const Vec& logits, const std::vector<double>& t_grid,
                                         const SoftmaxPolicy& policy);

// CSV with header t,plain_norm,sn_norm; 17 significant digits.
void write_grad_norm_csv(std::ostream& os, const std::vector<GradNormRow>& rows);

}  // namespace sparsetemp
