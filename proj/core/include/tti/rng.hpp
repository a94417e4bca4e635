#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tti/errors.hpp"

namespace tti {

// splitmix64 step, used to derive independent seed streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministically mixes a base seed with up to three stream tags so that
// per-round / per-client generators are independent of each other.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t s = base;
    splitmix64(s);
    s ^= a + 0x9e3779b97f4a7c15ULL;
    splitmix64(s);
    s ^= b + 0xbf58476d1ce4e5b9ULL;
    splitmix64(s);
    s ^= c + 0x94d049bb133111ebULL;
    return splitmix64(s);
}

// Seeded generator with hand-rolled variate transforms. The engine itself is
// fully specified by the standard and the transforms avoid the
// implementation-defined std::*_distribution classes, so identical seeds give
// identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    int uniform_int(int n) {
        if (n <= 0) throw InternalError("uniform_int: n must be positive");
        return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                                 static_cast<unsigned __int128>(n)) >>
                                64);
    }

    // Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * pi() * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Exponential with rate 1.
    double exponential() { return -std::log(1.0 - uniform()); }

    // Gamma(shape, 1) via Marsaglia-Tsang, with the alpha+1 boost for shape < 1.
    double gamma(double shape) {
        if (shape <= 0.0) throw InternalError("gamma: shape must be positive");
        if (shape < 1.0) {
            double u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            double v = t * t * t;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Symmetric Dirichlet(alpha * 1_dim) on the probability simplex.
    std::vector<double> dirichlet(std::size_t dim, double alpha) {
        if (dim == 0) throw InternalError("dirichlet: dim must be positive");
        std::vector<double> draw(dim);
        double total = 0.0;
        for (auto& v : draw) {
            v = (alpha == 1.0) ? exponential() : gamma(alpha);
            total += v;
        }
        if (total <= 0.0) {
            // All-zero draw is possible for tiny alpha; fall back to uniform.
            for (auto& v : draw) v = 1.0 / static_cast<double>(dim);
            return draw;
        }
        for (auto& v : draw) v /= total;
        return draw;
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            int j = uniform_int(i + 1);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
        }
    }

    static constexpr double pi() { return 3.14159265358979323846; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace tti
