#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "blockprune/loss.hpp"

using namespace blockprune;

namespace {

// Direct evaluation of alpha*mean||t-s||^2 + mean CE, no shared code with the library.
double reference_loss(const std::vector<double>& t, const std::vector<double>& s, const std::vector<int>& y, int k,
                      double alpha) {
    const std::size_t n = y.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0, z = 0.0;
        for (int j = 0; j < k; ++j) {
            const double d = t.empty() ? 0.0 : t[i * k + j] - s[i * k + j];
            sq += d * d;
            z += std::exp(s[i * k + j]);
        }
        total += alpha * sq + (std::log(z) - s[i * k + static_cast<std::size_t>(y[i])]);
    }
    return total / static_cast<double>(n);
}

}  // namespace

TEST_SUITE("loss") {

TEST_CASE("two-class worked value") {
    std::vector<double> t{1.0, 0.0}, s{0.0, 0.0};
    std::vector<int> y{0};
    auto out = mimic_ce_loss<double>(t, s, y, 2, 1.0);
    CHECK(out.loss == doctest::Approx(1.0 + std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(out.loss - 1.6931) < 1e-4);
    CHECK(out.mimic == doctest::Approx(1.0));
    CHECK(out.ce == doctest::Approx(std::log(2.0)));
}

TEST_CASE("matching logits or zero alpha reduce to cross-entropy") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 2.0);
    std::vector<double> t(40), s(40);
    for (auto& v : t) v = nd(rng);
    for (auto& v : s) v = nd(rng);
    std::vector<int> y{1, 4, 9, 0};
    const double ce = reference_loss({}, s, y, 10, 0.0);
    CHECK(mimic_ce_loss<double>(s, s, y, 10, 1.0).loss == doctest::Approx(ce).epsilon(1e-12));
    CHECK(mimic_ce_loss<double>(t, s, y, 10, 0.0).loss == doctest::Approx(ce).epsilon(1e-12));
    CHECK(mimic_ce_loss<double>({}, s, y, 10, 0.0).loss == doctest::Approx(ce).epsilon(1e-12));
}

TEST_CASE("loss matches the direct formula and is never below its cross-entropy term") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 3.0);
    std::uniform_real_distribution<double> ua(0.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> t(40), s(40);
        for (auto& v : t) v = nd(rng);
        for (auto& v : s) v = nd(rng);
        std::vector<int> y(4);
        for (auto& v : y) v = static_cast<int>(rng() % 10);
        const double alpha = ua(rng);
        auto out = mimic_ce_loss<double>(t, s, y, 10, alpha);
        CHECK(out.loss == doctest::Approx(reference_loss(t, s, y, 10, alpha)).epsilon(1e-12));
        CHECK(out.loss >= out.ce);
    }
}

TEST_CASE("gradient matches central differences in double precision") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd(0.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> t(40), s(40);
        for (auto& v : t) v = nd(rng);
        for (auto& v : s) v = nd(rng);
        std::vector<int> y(4);
        for (auto& v : y) v = static_cast<int>(rng() % 10);
        const double alpha = 1.0;
        auto g = mimic_ce_loss<double>(t, s, y, 10, alpha).grad;
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double keep = s[i];
            const double h = 1e-6;
            s[i] = keep + h;
            const double up = reference_loss(t, s, y, 10, alpha);
            s[i] = keep - h;
            const double down = reference_loss(t, s, y, 10, alpha);
            s[i] = keep;
            const double fd = (up - down) / (2 * h);
            num += (fd - g[i]) * (fd - g[i]);
            den += fd * fd;
        }
        CHECK(std::sqrt(num / den) <= 1e-4);
    }
}

TEST_CASE("invalid inputs are rejected") {
    std::vector<double> s{0.0, 1.0}, t{0.0, 1.0, 2.0};
    std::vector<int> y{0};
    CHECK_THROWS_AS(mimic_ce_loss<double>(t, s, y, 2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(mimic_ce_loss<double>({}, s, y, 2, 1.0), std::invalid_argument);
    std::vector<int> bad{2};
    CHECK_THROWS_AS(mimic_ce_loss<double>(s, s, bad, 2, 1.0), std::invalid_argument);
    std::vector<double> nan{std::numeric_limits<double>::quiet_NaN(), 0.0};
    CHECK_THROWS_AS(mimic_ce_loss<double>(s, nan, y, 2, 1.0), std::domain_error);
    CHECK_THROWS_AS(mimic_ce_loss<double>(nan, s, y, 2, 1.0), std::domain_error);
}

TEST_CASE("large logits stay finite") {
    std::vector<float> s{1000.0f, -1000.0f, 0.0f};
    std::vector<int> y{1};
    auto out = mimic_ce_loss<float>({}, s, y, 3, 0.0f);
    CHECK(std::isfinite(out.loss));
    CHECK(out.loss == doctest::Approx(2000.0f));
}

}
