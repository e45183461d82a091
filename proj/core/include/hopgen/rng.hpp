#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace hopgen {

// SplitMix64 finalizer. Used to derive independent stream seeds from
// (master_seed, stream_id) so per-chain output is identical no matter how
// chains are scheduled across threads.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
}

// Deterministic random stream. The engine (mt19937_64) is bit-exact per the
// standard; uniform and normal transforms are spelled out here because the
// stdlib distributions are implementation-defined.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    RandomStream(std::uint64_t master, std::uint64_t stream_id)
        : engine_(derive_seed(master, stream_id)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1], safe as a log argument.
    double uniform_pos() {
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection sampling for an unbiased draw from {0, ..., n-1}.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Box-Muller, one value per call; the spare is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    Eigen::VectorXd normal_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    // Uniform direction on the unit sphere in R^d.
    Eigen::VectorXd unit_sphere(Eigen::Index d) {
        Eigen::VectorXd v = normal_vector(d);
        double norm = v.norm();
        while (norm < 1e-12) { // astronomically unlikely; redraw
            v = normal_vector(d);
            norm = v.norm();
        }
        return v / norm;
    }

    double exponential() { return -std::log(uniform_pos()); }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace hopgen
