#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "sparsetemp/metrics.hpp"
#include "sparsetemp/snsoftmax.hpp"

using namespace sparsetemp;

namespace {

// Independent oracle: central finite differences of softmax_t.
Mat fd_jacobian(const Vec& logits, double t, double h = 1e-6) {
    const std::size_t m = logits.size();
    Mat jac(m, m);
    for (std::size_t j = 0; j < m; ++j) {
        Vec hi = logits, lo = logits;
        hi[j] += h;
        lo[j] -= h;
        const Vec up = softmax_t(hi, t), down = softmax_t(lo, t);
        for (std::size_t i = 0; i < m; ++i) jac(i, j) = (up[i] - down[i]) / (2.0 * h);
    }
    return jac;
}

double max_abs_diff(const Mat& a, const Mat& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.a.size(); ++i)
        worst = std::max(worst, std::abs(a.a[i] - b.a[i]));
    return worst;
}

double max_abs(const Mat& m) {
    double worst = 0.0;
    for (double x : m.a) worst = std::max(worst, std::abs(x));
    return worst;
}

}  // namespace

TEST_CASE("softmax_t worked values") {
    const Vec uniform = softmax_t({0.0, 0.0, 0.0}, 1.0);
    for (double p : uniform) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    const Vec p1 = softmax_t({1.0, 2.0, 3.0}, 1.0);
    CHECK(p1[0] == doctest::Approx(0.09003057).epsilon(1e-6));
    CHECK(p1[1] == doctest::Approx(0.24472847).epsilon(1e-6));
    CHECK(p1[2] == doctest::Approx(0.66524096).epsilon(1e-6));

    const Vec p2 = softmax_t({1.0, 2.0, 3.0}, 0.1);
    CHECK(p2[0] == doctest::Approx(2.0611e-9).epsilon(1e-3));
    CHECK(p2[1] == doctest::Approx(4.5398e-5).epsilon(1e-3));
    CHECK(p2[2] == doctest::Approx(0.99995).epsilon(1e-5));
}

TEST_CASE("softmax_t stabilization and errors") {
    // |a|/t = 700 must not overflow thanks to max subtraction.
    const Vec p = softmax_t({700.0, 0.0}, 1.0);
    CHECK(std::isfinite(p[0]));
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(softmax_t({1.0, 2.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(softmax_t({1.0, 2.0}, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(softmax_t({std::nan(""), 0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(softmax_t({std::numeric_limits<double>::infinity(), 0.0}, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(softmax_t({}, 1.0), std::invalid_argument);
}

TEST_CASE("softmax_jacobian worked values") {
    const Mat j1 = softmax_jacobian({0.5, 0.5}, 1.0);
    CHECK(j1(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(j1(0, 1) == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(j1(1, 0) == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(j1(1, 1) == doctest::Approx(0.25).epsilon(1e-14));

    const Mat j2 = softmax_jacobian({1.0, 0.0}, 0.37);
    CHECK(max_abs(j2) == 0.0);

    CHECK_THROWS_AS(softmax_jacobian({0.5, 0.5}, 0.0), std::invalid_argument);

    // Finite-difference oracle at the spec's example point.
    const Vec beta = softmax_t({1.0, 2.0, 3.0}, 1.0);
    const Mat analytic = softmax_jacobian(beta, 1.0);
    const Mat fd = fd_jacobian({1.0, 2.0, 3.0}, 1.0);
    CHECK(max_abs_diff(analytic, fd) < 1e-8);
}

TEST_CASE("softmax_jacobian matches finite differences over random cases") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> temp(0.05, 10.0);
    double worst_rel = 0.0;
    int checked = 0;
    while (checked < 1000) {
        const std::size_t m = 2 + static_cast<std::size_t>(checked % 7);
        const double t = temp(rng);
        // Keep the logit spread proportional to t so the softmax is not fully
        // saturated; a flat-at-double-precision function cannot be probed by
        // finite differences.
        Vec logits(m);
        for (double& a : logits) a = std::min(1.0, 2.0 * t) * normal(rng);
        const Vec beta = softmax_t(logits, t);
        double mx = 0.0;
        for (double p : beta) mx = std::max(mx, p);
        if (mx > 0.999) continue;
        const Mat analytic = softmax_jacobian(beta, t);
        const Mat fd = fd_jacobian(logits, t);
        const double scale = std::max(max_abs(fd), 1e-300);
        worst_rel = std::max(worst_rel, max_abs_diff(analytic, fd) / scale);
        ++checked;
    }
    CHECK(worst_rel < 1e-6);
}

TEST_CASE("row sums of the Jacobian annihilate the ones vector") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int it = 0; it < 100; ++it) {
        Vec logits(5);
        for (double& a : logits) a = normal(rng);
        const double t = it % 2 == 0 ? 0.1 : 2.0;
        const Mat jac = softmax_jacobian(softmax_t(logits, t), t);
        for (std::size_t i = 0; i < 5; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < 5; ++j) row += jac(i, j);
            CHECK(std::abs(row) < 1e-12);
        }
    }
}

TEST_CASE("sn_forward worked values") {
    // st == 1 at t = 0.01 means s = 100.
    const TemperedDistribution d = sn_forward({0.04, 0.0}, 0.01, 100.0);
    CHECK(d.beta[0] == doctest::Approx(0.98201379).epsilon(1e-6));
    CHECK(d.beta[1] == doctest::Approx(0.01798621).epsilon(1e-6));
    CHECK(d.beta_noisy[0] == doctest::Approx(0.50999867).epsilon(1e-6));
    CHECK(d.beta_noisy[1] == doctest::Approx(0.49000133).epsilon(1e-6));

    const TemperedDistribution sym = sn_forward({0.0, 0.0}, 0.42, 17.0);
    CHECK(sym.beta[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(sym.beta_noisy[0] == doctest::Approx(0.5).epsilon(1e-14));

    // Direct evaluation of softmax([1,2,3]/100).
    const TemperedDistribution d3 = sn_forward({1.0, 2.0, 3.0}, 1.0, 100.0);
    CHECK(d3.beta[1] == doctest::Approx(0.24472847).epsilon(1e-6));
    CHECK(d3.beta_noisy[0] == doctest::Approx(0.33000561).epsilon(1e-6));
    CHECK(d3.beta_noisy[1] == doctest::Approx(0.33332222).epsilon(1e-6));
    CHECK(d3.beta_noisy[2] == doctest::Approx(0.33667217).epsilon(1e-6));

    CHECK_THROWS_AS(sn_forward({1.0, 2.0}, 0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(sn_forward({1.0, 2.0}, -0.5, 2.0), std::invalid_argument);
}

TEST_CASE("sn_backward saturated escape example") {
    TemperedDistribution dist;
    dist.beta = {1.0, 0.0};
    dist.beta_noisy = {0.51, 0.49};
    dist.t = 0.01;
    dist.s = 100.0;
    const Vec grad = sn_backward(dist, {1.0, -1.0});
    CHECK(grad[0] == doctest::Approx(0.4998).epsilon(1e-10));
    CHECK(grad[1] == doctest::Approx(-0.4998).epsilon(1e-10));

    const Vec zero = sn_backward(dist, {0.0, 0.0});
    CHECK(zero[0] == 0.0);
    CHECK(zero[1] == 0.0);

    CHECK_THROWS_AS(sn_backward(dist, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("sn_backward additivity is exact") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int it = 0; it < 50; ++it) {
        Vec logits(5), up(5);
        for (double& a : logits) a = normal(rng);
        for (double& g : up) g = normal(rng);
        const double t = 0.3;
        const TemperedDistribution dist = sn_forward(logits, t, 100.0);
        const Vec combined = sn_backward(dist, up);
        const Vec plain = matvec(softmax_jacobian(dist.beta, t), up);
        const Vec noise = matvec(softmax_jacobian(dist.beta_noisy, 100.0 * t), up);
        for (std::size_t i = 0; i < 5; ++i) CHECK(combined[i] == plain[i] + noise[i]);

        // Disabling the noisy term recovers the plain backward bit-for-bit.
        TemperedDistribution no_noise = dist;
        no_noise.s = 1.0;
        const Vec recovered = sn_backward(no_noise, up);
        for (std::size_t i = 0; i < 5; ++i) CHECK(recovered[i] == plain[i]);
    }
}

TEST_CASE("unsaturated sn gradient stays aligned with the plain gradient") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal(0.0, 1.0);
    int checked = 0;
    while (checked < 100) {
        Vec logits(5), up(5);
        for (double& a : logits) a = normal(rng);
        const Vec beta = softmax_t(logits, 1.0);
        double mx = 0.0;
        for (double p : beta) mx = std::max(mx, p);
        if (mx > 0.9) continue;
        for (double& g : up) g = normal(rng);
        const TemperedDistribution dist = sn_forward(logits, 1.0, 100.0);
        const Vec sn = sn_backward(dist, up);
        const Vec plain = matvec(softmax_jacobian(beta, 1.0), up);
        const double cosine = dot(sn, plain) / (norm2(sn) * norm2(plain));
        CHECK(cosine >= 0.99);
        ++checked;
    }
}

TEST_CASE("saturation escape: noisy term keeps the gradient alive") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int it = 0; it < 50; ++it) {
        Vec logits(5, 0.0);
        logits[it % 5] = 1.0 + 0.2 * std::abs(normal(rng));  // dominant but moderate
        const double t = 0.01;
        const double s = 1.0 / t;  // st == 1
        const TemperedDistribution dist = sn_forward(logits, t, s);
        double mx = 0.0, mxn = 0.0;
        for (double p : dist.beta) mx = std::max(mx, p);
        for (double p : dist.beta_noisy) mxn = std::max(mxn, p);
        REQUIRE(mx > 1.0 - 1e-12);
        REQUIRE(mxn < 0.99);
        Vec up(5);
        for (double& g : up) g = normal(rng);
        const Vec grad = sn_backward(dist, up);
        CHECK(norm2(grad) > 1e-6 * norm2(up));
    }
}

TEST_CASE("entropy of softmax_t is strictly increasing in temperature") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec logits(6);
    for (double& a : logits) a = normal(rng);
    double prev = -1.0;
    for (int i = 0; i < 60; ++i) {
        const double t = 0.02 * std::pow(10.0 / 0.02, i / 59.0);
        const double h = beta_entropy(softmax_t(logits, t));
        CHECK(h > prev);
        prev = h;
    }
}

TEST_CASE("probability conservation over random draws") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal(0.0, 2.0);
    std::uniform_real_distribution<double> temp(1e-3, 10.0);
    for (int it = 0; it < 1000; ++it) {
        Vec logits(3 + it % 6);
        for (double& a : logits) a = normal(rng);
        const Vec p = softmax_t(logits, temp(rng));
        double sum = 0.0;
        for (double x : p) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
            sum += x;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("grad_norm_probe saturated and smooth regimes") {
    SoftmaxPolicy st1;
    st1.mode = SoftmaxMode::SnStConst;
    st1.st_const = 1.0;

    // Deep saturation: the plain gradient underflows, the noisy term survives.
    const auto deep = grad_norm_probe({10.0, 0.0, 0.0, 0.0, 0.0}, {0.01}, st1);
    CHECK(deep[0].plain_norm < 1e-12);
    CHECK(deep[0].sn_norm > 1e-6);

    // A moderate dominant logit still saturates at t = 0.01 but leaves a
    // noisy distribution smooth enough for a visibly large escape term.
    const auto moderate = grad_norm_probe({1.0, 0.0, 0.0, 0.0, 0.0}, {0.01}, st1);
    CHECK(moderate[0].plain_norm < 1e-12);
    CHECK(moderate[0].sn_norm > 1e-3);

    // Uniform logits: the noise term scales the plain term by exactly 1/s.
    SoftmaxPolicy fixed;
    fixed.mode = SoftmaxMode::SnFixedS;
    fixed.s = 100.0;
    const auto uniform = grad_norm_probe({0.0, 0.0, 0.0, 0.0, 0.0}, {1.0, 0.2, 0.05}, fixed);
    for (const auto& row : uniform) {
        CHECK(std::abs(row.sn_norm - row.plain_norm) / row.plain_norm ==
              doctest::Approx(0.01).epsilon(1e-9));
    }

    // Init-scale logits: sn and plain norms agree within 2 percent.
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 1e-3);
    for (int it = 0; it < 20; ++it) {
        Vec logits(5);
        for (double& a : logits) a = normal(rng);
        const auto rows = grad_norm_probe(logits, {1.0}, fixed);
        CHECK(std::abs(rows[0].sn_norm - rows[0].plain_norm) / rows[0].plain_norm < 0.02);
    }

    CHECK_THROWS_AS(grad_norm_probe({1.0, 0.0}, {}, st1), std::invalid_argument);
}

TEST_CASE("grad_norm_probe CSV format") {
    SoftmaxPolicy st1;
    st1.mode = SoftmaxMode::SnStConst;
    const auto rows = grad_norm_probe({1.0, 0.0, 0.0}, {1.0, 0.1}, st1);
    std::ostringstream os;
    write_grad_norm_csv(os, rows);
    const std::string text = os.str();
    CHECK(text.rfind("t,plain_norm,sn_norm\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("st-const policy clamps the scaling factor") {
    SoftmaxPolicy policy;
    policy.mode = SoftmaxMode::SnStConst;
    policy.st_const = 1.0;
    CHECK(policy.scale_for(1e-3) == doctest::Approx(1e3));
    CHECK(policy.scale_for(2.0) == 1.0);      // never below 1
    CHECK(policy.scale_for(1e-12) == 1e6);    // clamped
    // s == 1 means the forward caches beta_noisy == beta and the backward is plain.
    const TemperedDistribution dist = policy.forward({0.5, -0.5}, 2.0);
    CHECK(dist.s == 1.0);
    CHECK(dist.beta == dist.beta_noisy);
}
