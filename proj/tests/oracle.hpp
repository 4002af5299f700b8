#pragma once

// Reference implementations used only by tests. They are written the slow,
// obvious way and share no code with the library beyond plain data types.

#include "exostitch/transition_db.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// Literal double sum over (i, j) with std::pow.
inline double constant_C(double L_R, double L_f, double L_pi, int h) {
    double s = 0.0;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j <= h - i - 1; ++j) s += std::pow(L_f * (1.0 + L_pi), j);
    }
    return L_R * s;
}

inline double constant_Ci(double L_Ri, double L_fi, int h) {
    double s = 0.0;
    for (int b = 0; b < h; ++b) {
        for (int j = 0; j <= h - b - 1; ++j) s += std::pow(L_fi, j);
    }
    return L_Ri * s;
}

// Plain weighted, standardized squared distance between two feature vectors.
inline double sq_dist(const std::vector<double>& u, const std::vector<double>& v, const std::vector<double>& mean,
                      const std::vector<double>& sd, const std::vector<double>& weight) {
    double s = 0.0;
    for (std::size_t f = 0; f < u.size(); ++f) {
        if (!(sd[f] > 0.0)) continue;
        const double d = (u[f] - mean[f]) / sd[f] - (v[f] - mean[f]) / sd[f];
        s += weight[f] * d * d;
    }
    return s;
}

// Population mean and standard deviation, one feature at a time.
inline std::pair<double, double> mean_sd(const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

// Sorted-copy median with the midpoint rule for even n.
inline double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const auto n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// 1-D k-dispersion by enumeration.
inline double k_dispersion_1d(const std::vector<double>& pts, std::size_t k) {
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::vector<double> d;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (j != i) d.push_back(std::abs(pts[i] - pts[j]));
        }
        std::sort(d.begin(), d.end());
        worst = std::max(worst, d.at(k - 1));
    }
    return worst;
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        const double fa = static_cast<double>(i) / static_cast<double>(a.size());
        const double fb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

// Large-sample critical value c(alpha) * sqrt((n + m) / (n m)).
inline double ks_critical(std::size_t n, std::size_t m, double alpha) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt(static_cast<double>(n + m) / static_cast<double>(n * m));
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 gen(std::random_device{}());
        path = std::filesystem::temp_directory_path() / ("exostitch-" + tag + "-" + std::to_string(gen()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

} // namespace oracle
