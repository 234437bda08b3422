#pragma once

#include <cstddef>
#include <cstdio>
#include <string>

#include "farel/core/error.hpp"

namespace farel {

enum class WindowKind { sliding, discounted };

/// Shape of the interaction history. A sliding window keeps at most `window`
/// interactions with unit weight; a discounted history keeps at least `window`
/// interactions, weights them by gamma^age and truncates back to `window` once
/// the guiding notion has been stable (|delta| < threshold) for `delay` steps.
struct WindowSpec {
    WindowKind kind = WindowKind::sliding;
    std::size_t window = 500;
    double gamma = 1.0;
    double threshold = 1e-4;
    std::size_t delay = 10;

    static WindowSpec sliding(std::size_t w) {
        WindowSpec s;
        s.kind = WindowKind::sliding;
        s.window = w;
        return s;
    }

    static WindowSpec discounted(std::size_t w, double gamma, double threshold, std::size_t delay) {
        WindowSpec s;
        s.kind = WindowKind::discounted;
        s.window = w;
        s.gamma = gamma;
        s.threshold = threshold;
        s.delay = delay;
        return s;
    }

    void validate() const {
        require(window >= 1, "window size must be at least 1");
        if (kind == WindowKind::discounted) {
            require(gamma > 0.0 && gamma <= 1.0, "discount factor must lie in (0, 1]");
            require(threshold >= 0.0, "discount threshold must be non-negative");
            require(delay >= 1, "discount delay must be at least 1");
        }
    }

    /// Short label used in cell names, e.g. "w500" or "d500_g0.95_t0.0001_d10".
    std::string label() const {
        if (kind == WindowKind::sliding) {
            return "w" + std::to_string(window);
        }
        auto trim = [](double v) {
            std::string s = std::to_string(v);
            while (!s.empty() && s.back() == '0') {
                s.pop_back();
            }
            if (!s.empty() && s.back() == '.') {
                s.pop_back();
            }
            return s;
        };
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", threshold);
        return "d" + std::to_string(window) + "_g" + trim(gamma) + "_t" + buf + "_d" + std::to_string(delay);
    }
};

} // namespace farel
