#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <span>

#include "pnid/core/errors.hpp"

namespace pnid::data {

inline constexpr std::size_t kFeatures = 6;
inline constexpr std::size_t kLabels = 2;  // N, tau_M

/// Min-max statistics for one scalar channel.
struct Range {
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();

    void include(double v) {
        min = std::min(min, v);
        max = std::max(max, v);
    }
    void check() const {
        if (!(max > min)) throw ConfigError("degenerate normalization range (max <= min)");
    }
    double normalize(double v) const { return (v - min) / (max - min); }
    double denormalize(double z) const { return min + z * (max - min); }
    double span() const { return max - min; }

    bool operator==(const Range&) const = default;
};

struct NormStats {
    std::array<Range, kFeatures> features;
    std::array<Range, kLabels> labels;

    void check() const {
        for (const auto& r : features) r.check();
        for (const auto& r : labels) r.check();
    }

    void normalize_features(std::span<double> row) const {
        for (std::size_t i = 0; i < kFeatures; ++i) row[i] = features[i].normalize(row[i]);
    }
    std::array<double, kLabels> normalize_labels(const std::array<double, kLabels>& y) const {
        return {labels[0].normalize(y[0]), labels[1].normalize(y[1])};
    }
    std::array<double, kLabels> denormalize_labels(const std::array<double, kLabels>& z) const {
        return {labels[0].denormalize(z[0]), labels[1].denormalize(z[1])};
    }

    bool operator==(const NormStats&) const = default;
};

inline double normalize(double value, const Range& r) {
    r.check();
    return r.normalize(value);
}

inline double denormalize(double z, const Range& r) {
    r.check();
    return r.denormalize(z);
}

}  // namespace pnid::data
