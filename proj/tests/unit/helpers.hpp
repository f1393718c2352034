#pragma once

#include "pmussl/common.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing {

using pmussl::Index;
using pmussl::Labels;
using pmussl::Matrix;

/// Isotropic Gaussian blobs around the given centers, `per` points each,
/// labels 1..centers.rows().
inline void blobs(const Matrix& centers, int per, double spread, std::uint64_t seed, Matrix& X,
                  Labels& Y) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, spread);
    X.resize(centers.rows() * per, centers.cols());
    Y.clear();
    for (Index c = 0; c < centers.rows(); ++c)
        for (int i = 0; i < per; ++i) {
            const Index r = c * per + i;
            for (Index j = 0; j < centers.cols(); ++j) X(r, j) = centers(c, j) + g(rng);
            Y.push_back(static_cast<int>(c) + 1);
        }
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("pmussl_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace testing
