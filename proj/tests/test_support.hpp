#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "statefusion/grid.hpp"

namespace statefusion::support {

inline std::filesystem::path fixture_dir() { return STATEFUSION_FIXTURE_DIR; }
inline std::filesystem::path data_dir() { return STATEFUSION_DATA_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& name) {
        path_ = std::filesystem::temp_directory_path() / ("statefusion_" + name + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline Grid random_grid(std::mt19937_64& gen, std::size_t rows, std::size_t cols, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Grid g(rows, cols);
    for (auto& v : g.data()) v = dist(gen);
    return g;
}

/// Random column-stochastic matrix.
inline Grid random_stochastic(std::mt19937_64& gen, std::size_t rows, std::size_t cols) {
    Grid g = random_grid(gen, rows, cols, 0.0, 1.0);
    for (std::size_t c = 0; c < cols; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < rows; ++r) s += g(r, c);
        for (std::size_t r = 0; r < rows; ++r) g(r, c) /= s;
    }
    return g;
}

inline std::vector<double> random_distribution(std::mt19937_64& gen, std::size_t n) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(n);
    double s = 0.0;
    for (auto& x : v) s += x = dist(gen);
    for (auto& x : v) x /= s;
    return v;
}

}  // namespace statefusion::support
