#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "pnid/core/errors.hpp"
#include "pnid/core/rng.hpp"
#include "pnid/data/normalize.hpp"
#include "pnid/sensing/measurement.hpp"

namespace pnid::data {

/// A window ending at tick `end` (inclusive) covering `length` ticks.
struct WindowSpec {
    std::size_t end = 0;
    std::size_t length = 0;

    std::size_t first() const { return end + 1 - length; }
    bool operator==(const WindowSpec&) const = default;
};

/// Window ending at `end` with at most K steps: all ticks 0..end when fewer than K exist,
/// otherwise the most recent K.
inline WindowSpec window_ending_at(std::size_t end, std::size_t K) {
    if (K == 0) throw ConfigError("window size K must be positive");
    return {end, std::min(K, end + 1)};
}

struct WindowDraw {
    std::vector<WindowSpec> windows;  // ascending end ticks
    std::string skipped;               // reason when no window could be drawn
};

/// Second LHS pass: `count` distinct end ticks stratified over [l_min - 1, ticks - 1].
/// The valid range is cut into `count` contiguous integer blocks of near-equal size and
/// one end tick is drawn uniformly inside each block. Asking for more windows than valid
/// end ticks returns every end tick once.
inline WindowDraw extract_windows(std::size_t ticks, std::size_t K, std::size_t count, std::size_t l_min,
                                  Rng& rng) {
    if (l_min == 0) throw ConfigError("minimum window length must be positive");
    if (l_min > K) throw ConfigError("minimum window length exceeds K");
    WindowDraw out;
    if (ticks < l_min) {
        out.skipped = "series has " + std::to_string(ticks) + " ticks, fewer than l_min = " + std::to_string(l_min);
        return out;
    }
    const std::size_t lo = l_min - 1;
    const std::size_t span = ticks - lo;
    const std::size_t n = std::min(count, span);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t b0 = k * span / n;
        const std::size_t b1 = (k + 1) * span / n;
        const std::size_t pick = b0 + static_cast<std::size_t>(rng() % (b1 - b0));
        out.windows.push_back(window_ending_at(lo + pick, K));
    }
    return out;
}

/// Physical-unit feature matrix of a window, row-major (length x 6).
inline std::vector<double> window_values(const sensing::FeatureSeries& f, const WindowSpec& w) {
    if (w.end >= f.size() || w.length == 0 || w.length > w.end + 1)
        throw ConfigError("window lies outside the feature series");
    std::vector<double> out;
    out.reserve(w.length * kFeatures);
    for (std::size_t i = w.first(); i <= w.end; ++i) {
        const auto v = f.rows[i].values();
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

/// Normalizes a row-major window in place.
inline void normalize_window(std::vector<double>& values, const NormStats& stats) {
    for (std::size_t i = 0; i + kFeatures <= values.size(); i += kFeatures)
        stats.normalize_features(std::span<double>(values.data() + i, kFeatures));
}

}  // namespace pnid::data
