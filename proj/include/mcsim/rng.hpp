#ifndef MCSIM_RNG_HPP
#define MCSIM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mcsim {

/// splitmix64 mixing step; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stable per-(group, index) sub-seed from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t group,
                                 std::uint64_t index) {
    return splitmix64(splitmix64(master ^ splitmix64(group)) ^ splitmix64(index + 1));
}

/// Deterministic random stream. All draws are defined directly on the
/// mt19937_64 output so sequences do not depend on the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Modulo bias is negligible for the small n used here.
        return engine_() % n;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Box-Muller; one value per call, no cached state.
    double gaussian() {
        double u;
        do {
            u = uniform01();
        } while (u <= 0.0);
        const double v = uniform01();
        return std::sqrt(-2.0 * std::log(u)) *
               std::cos(2.0 * 3.14159265358979323846 * v);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace mcsim

#endif // MCSIM_RNG_HPP
