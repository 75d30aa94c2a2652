#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "saddlekit/linalg.hpp"

namespace saddlekit {

/// Seeded generator whose output does not depend on the standard library's
/// distribution implementations, so seeds reproduce across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 == 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    Index index(Index lo, Index hi) {  // inclusive
        return lo + static_cast<Index>(uniform() * static_cast<double>(hi - lo + 1));
    }

    Matrix normal_matrix(Index rows, Index cols) {
        Matrix a(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) a(i, j) = normal();
        return a;
    }

    Vector uniform_vector(Index n, double lo, double hi) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
        return v;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace saddlekit
