#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pnid/core/errors.hpp"

namespace pnid::sensing {

/// Centered moving average of odd width; the window is truncated at the ends.
inline std::vector<double> centered_moving_average(std::span<const double> x, std::size_t width) {
    if (width <= 1 || x.size() < 2) return {x.begin(), x.end()};
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(width / 2);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
    std::vector<double> out(x.size());
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, k - half);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, k + half);
        double sum = 0.0;
        for (std::ptrdiff_t i = lo; i <= hi; ++i) sum += x[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(k)] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

/// Trailing moving average; output k only reads inputs 0..k.
inline std::vector<double> trailing_moving_average(std::span<const double> x, std::size_t width) {
    if (width <= 1) return {x.begin(), x.end()};
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const std::size_t lo = k + 1 >= width ? k + 1 - width : 0;
        double sum = 0.0;
        for (std::size_t i = lo; i <= k; ++i) sum += x[i];
        out[k] = sum / static_cast<double>(k - lo + 1);
    }
    return out;
}

enum class DifferencingMode {
    Offline,  // central differences, one-sided at the ends, centered smoothing
    Causal,   // backward differences, trailing smoothing
};

/// Smoothed numerical derivative of a uniformly sampled signal.
/// Causal mode reads at most index k+1 for output k (only at k = 0, where no
/// backward difference exists yet).
inline std::vector<double> smoothed_derivative(std::span<const double> x, double period,
                                               std::size_t width = 5,
                                               DifferencingMode mode = DifferencingMode::Offline) {
    const std::size_t n = x.size();
    if (n < 2) throw InsufficientDataError("differencing needs at least 2 samples");
    std::vector<double> d(n);
    if (mode == DifferencingMode::Offline) {
        d[0] = (x[1] - x[0]) / period;
        d[n - 1] = (x[n - 1] - x[n - 2]) / period;
        for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (x[k + 1] - x[k - 1]) / (2.0 * period);
        return centered_moving_average(d, width);
    }
    d[0] = (x[1] - x[0]) / period;
    for (std::size_t k = 1; k < n; ++k) d[k] = (x[k] - x[k - 1]) / period;
    return trailing_moving_average(d, width);
}

}  // namespace pnid::sensing
