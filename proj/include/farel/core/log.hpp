#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace farel::log {

enum class Level { debug = 0, info, warning, error, off };

inline std::atomic<Level>& threshold() {
    static std::atomic<Level> level{Level::warning};
    return level;
}

inline void write(Level lvl, std::string_view msg) {
    if (lvl < threshold().load()) {
        return;
    }
    static std::mutex mu;
    constexpr std::string_view tags[] = {"debug", "info", "warning", "error"};
    std::lock_guard lock(mu);
    std::clog << "[farel " << tags[static_cast<int>(lvl)] << "] " << msg << '\n';
}

inline void info(std::string_view msg) { write(Level::info, msg); }
inline void warn(std::string_view msg) { write(Level::warning, msg); }
inline void error(std::string_view msg) { write(Level::error, msg); }

} // namespace farel::log
