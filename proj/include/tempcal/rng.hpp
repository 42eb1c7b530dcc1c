#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace tempcal {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the index-th independent stream under a master seed. Parallel work units
/// draw from derive_seed(master, unit) so serial and OpenMP runs consume identical
/// random numbers regardless of scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(master ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t index) {
    return Rng(derive_seed(master, index));
}

/// Named stream tags so unrelated consumers of one seed never collide.
namespace stream {
inline constexpr std::uint64_t theta_star = 0xA11CE000ULL;
inline constexpr std::uint64_t test_set = 0xA11CE001ULL;
inline constexpr std::uint64_t strategy = 0xA11CE002ULL;
inline constexpr std::uint64_t design = 0xA11CE003ULL;
inline constexpr std::uint64_t noise = 0xA11CE004ULL;
inline constexpr std::uint64_t oracle = 0xA11CE005ULL;
}  // namespace stream

inline Eigen::VectorXd standard_normal_vector(Eigen::Index d, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(d);
    for (Eigen::Index j = 0; j < d; ++j) v(j) = normal(rng);
    return v;
}

}  // namespace tempcal
