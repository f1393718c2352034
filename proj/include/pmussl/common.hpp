#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmussl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Label vector; class codes 1..4, -1 marks an unlabeled row.
using Labels = std::vector<int>;

inline constexpr int kUnlabeled = -1;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameters (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem or parse failure (CLI exit code 1).
class IoError : public Error {
public:
    using Error::Error;
};

/// Matrix or vector dimensions inconsistent with the contract.
class ShapeError : public Error {
public:
    using Error::Error;
};

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and a tag path,
/// e.g. derive_seed(master, {k, q, s, r}).
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t h = mix64(master);
    for (auto t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
    return h;
}

}  // namespace pmussl
