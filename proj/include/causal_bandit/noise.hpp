#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <variant>

#include "causal_bandit/errors.hpp"

namespace causal_bandit {

using Rng = std::mt19937_64;

struct UniformNoise {
    double lo;
    double hi;
};

/// Gaussian restricted to [mean - bound, mean + bound]; symmetric, so the
/// mean is unchanged by the truncation.
struct TruncatedGaussianNoise {
    double mean;
    double sd;
    double bound;
};

/// Unbounded; only meant for closed-form checks, not for bandit runs.
struct GaussianNoise {
    double mean;
    double sd;
};

struct ConstantNoise {
    double value;
};

class NoiseSpec {
public:
    using Family = std::variant<UniformNoise, TruncatedGaussianNoise, GaussianNoise, ConstantNoise>;

    NoiseSpec() : family_(ConstantNoise{0.0}) {}
    NoiseSpec(Family f) : family_(f) { check(); }  // NOLINT(google-explicit-constructor)

    static NoiseSpec uniform(double lo, double hi) { return NoiseSpec(UniformNoise{lo, hi}); }
    static NoiseSpec truncated_gaussian(double mean, double sd, double bound) {
        return NoiseSpec(TruncatedGaussianNoise{mean, sd, bound});
    }
    static NoiseSpec gaussian(double mean, double sd) { return NoiseSpec(GaussianNoise{mean, sd}); }
    static NoiseSpec constant(double c) { return NoiseSpec(ConstantNoise{c}); }

    const Family& family() const noexcept { return family_; }

    double mean() const {
        return std::visit(
            [](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, UniformNoise>) return 0.5 * (f.lo + f.hi);
                else if constexpr (std::is_same_v<T, ConstantNoise>) return f.value;
                else return f.mean;
            },
            family_);
    }

    /// Largest |value| the noise can take.
    double magnitude_bound() const {
        return std::visit(
            [](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, UniformNoise>) return std::max(std::abs(f.lo), std::abs(f.hi));
                else if constexpr (std::is_same_v<T, TruncatedGaussianNoise>)
                    return std::max(std::abs(f.mean - f.bound), std::abs(f.mean + f.bound));
                else if constexpr (std::is_same_v<T, GaussianNoise>) return std::numeric_limits<double>::infinity();
                else return std::abs(f.value);
            },
            family_);
    }

    double sample(Rng& rng) const {
        return std::visit(
            [&rng](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, UniformNoise>) {
                    return std::uniform_real_distribution<double>(f.lo, f.hi)(rng);
                } else if constexpr (std::is_same_v<T, TruncatedGaussianNoise>) {
                    std::normal_distribution<double> dist(f.mean, f.sd);
                    while (true) {
                        const double x = dist(rng);
                        if (std::abs(x - f.mean) <= f.bound) return x;
                    }
                } else if constexpr (std::is_same_v<T, GaussianNoise>) {
                    return std::normal_distribution<double>(f.mean, f.sd)(rng);
                } else {
                    return f.value;
                }
            },
            family_);
    }

    friend bool operator==(const NoiseSpec& a, const NoiseSpec& b) {
        if (a.family_.index() != b.family_.index()) return false;
        return std::visit(
            [&b](const auto& fa) {
                using T = std::decay_t<decltype(fa)>;
                const auto& fb = std::get<T>(b.family_);
                if constexpr (std::is_same_v<T, UniformNoise>) return fa.lo == fb.lo && fa.hi == fb.hi;
                else if constexpr (std::is_same_v<T, TruncatedGaussianNoise>)
                    return fa.mean == fb.mean && fa.sd == fb.sd && fa.bound == fb.bound;
                else if constexpr (std::is_same_v<T, GaussianNoise>) return fa.mean == fb.mean && fa.sd == fb.sd;
                else return fa.value == fb.value;
            },
            a.family_);
    }

private:
    void check() const {
        std::visit(
            [](const auto& f) {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, UniformNoise>) {
                    if (!(f.lo < f.hi)) throw InvalidInstance("uniform noise needs lo < hi");
                } else if constexpr (std::is_same_v<T, TruncatedGaussianNoise>) {
                    if (!(f.sd > 0.0) || !(f.bound > 0.0))
                        throw InvalidInstance("truncated gaussian needs sd > 0 and bound > 0");
                } else if constexpr (std::is_same_v<T, GaussianNoise>) {
                    if (!(f.sd > 0.0)) throw InvalidInstance("gaussian noise needs sd > 0");
                }
            },
            family_);
    }

    Family family_;
};

}  // namespace causal_bandit
