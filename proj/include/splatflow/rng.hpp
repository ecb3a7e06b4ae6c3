// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace splatflow {

// Deterministic RNG scheme, layout "rng-v1". A stream is an mt19937_64 whose
// seed is derived from (user seed, stream tag, indices...) with splitmix64
// mixing. Changing any word yields an unrelated stream; the same words always
// yield the same stream, independent of call order or thread count.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = 0x8C19D2F651A2BB47ULL;
    for (std::uint64_t w : words) {
        h = splitmix64(h ^ w);
    }
    return h;
}

inline std::mt19937_64 make_rng(std::initializer_list<std::uint64_t> words) {
    return std::mt19937_64(derive_seed(words));
}

// Uniform double in [0, 1) from the top 53 bits of one engine draw. Exactly
// one draw per call; all samplers below are defined in terms of this.
inline double uniform_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_double(rng);
}

// Uniform direction on the unit sphere; two draws.
inline Eigen::Vector3d random_unit_vector(std::mt19937_64& rng) {
    const double z = uniform_range(rng, -1.0, 1.0);
    const double phi = uniform_range(rng, 0.0, 2.0 * std::numbers::pi);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
}

// Uniform unit quaternion (Shoemake's subgroup method); three draws.
inline Eigen::Quaterniond random_unit_quaternion(std::mt19937_64& rng) {
    const double u1 = uniform_double(rng);
    const double u2 = uniform_range(rng, 0.0, 2.0 * std::numbers::pi);
    const double u3 = uniform_range(rng, 0.0, 2.0 * std::numbers::pi);
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    return Eigen::Quaterniond(b * std::cos(u3), a * std::sin(u2), a * std::cos(u2), b * std::sin(u3));
}

// Rotation with axis uniform on the sphere and angle uniform in
// [0, max_angle]; three draws. max_angle = 0 gives the identity.
inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng, double max_angle) {
    const Eigen::Vector3d axis = random_unit_vector(rng);
    const double angle = uniform_range(rng, 0.0, max_angle);
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

} // namespace splatflow
