#pragma once
#include <cmath>
#include <cstdint>
#include <random>

namespace tfsde {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// collapse (seed, a, b) into one well-mixed stream key
inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = seed ^ 0xA0761D6478BD642Full;
    splitmix64(s);
    s ^= a;
    splitmix64(s);
    s ^= b;
    splitmix64(s);
    return s;
}

// deterministic standard normals: mt19937_64 + Box-Muller
// (std::normal_distribution is implementation-defined, so it is avoided)
class NormalStream {
public:
    explicit NormalStream(std::uint64_t key) : eng_(key) {}

    double uniform01() { // in (0,1), never 0
        return (double)((eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace tfsde
