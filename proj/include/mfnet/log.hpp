#pragma once

#include <atomic>
#include <iostream>
#include <string_view>

namespace mfnet::log {

inline std::atomic<bool>& quiet() {
    static std::atomic<bool> flag{false};
    return flag;
}

inline void warn(std::string_view message) {
    if (!quiet().load()) {
        std::clog << "mfnet: warning: " << message << '\n';
    }
}

inline void info(std::string_view message) {
    if (!quiet().load()) {
        std::clog << "mfnet: " << message << '\n';
    }
}

}  // namespace mfnet::log
