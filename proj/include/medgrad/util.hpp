#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace medgrad {

// FNV-1a, 64-bit. Used for content hashes in tests and `inspect-checkpoint`;
// stable across platforms by construction.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    return fnv1a64(s.data(), s.size());
}

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };

// Verbosity comes from the MEDGRAD_LOG environment variable
// (debug|info|warn|error); default is info.
inline LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("MEDGRAD_LOG");
        if (!env) return LogLevel::Info;
        std::string_view v(env);
        if (v == "debug") return LogLevel::Debug;
        if (v == "warn") return LogLevel::Warn;
        if (v == "error") return LogLevel::Error;
        return LogLevel::Info;
    }();
    return level;
}

inline void log_msg(LogLevel lvl, const std::string& msg) {
    if (lvl < log_level()) return;
    static const char* names[] = {"debug", "info", "warn", "error"};
    std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(lvl)], msg.c_str());
}

inline void log_debug(const std::string& m) { log_msg(LogLevel::Debug, m); }
inline void log_info(const std::string& m) { log_msg(LogLevel::Info, m); }
inline void log_warn(const std::string& m) { log_msg(LogLevel::Warn, m); }
inline void log_error(const std::string& m) { log_msg(LogLevel::Error, m); }

// Static-chunked parallel map over [0, n). Each index is touched exactly once
// and results must go to disjoint slots, so the schedule never affects output.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    unsigned nt = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (unsigned t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += nt) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace medgrad
