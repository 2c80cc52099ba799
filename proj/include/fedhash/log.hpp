#pragma once

// Minimal stderr logging, level picked once from FEDHASH_LOG
// (debug|info|warn|error; default warn).

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace fedhash {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };

inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("FEDHASH_LOG");
        if (!env) return LogLevel::Warn;
        if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
        if (std::strcmp(env, "info") == 0) return LogLevel::Info;
        if (std::strcmp(env, "error") == 0) return LogLevel::Error;
        return LogLevel::Warn;
    }();
    return level;
}

inline void vlog(LogLevel level, const char* tag, const char* fmt, std::va_list args) {
    if (level < log_level()) return;
    std::fprintf(stderr, "[%s] ", tag);
    std::vfprintf(stderr, fmt, args);
    std::fputc('\n', stderr);
}

inline void log_debug(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    vlog(LogLevel::Debug, "debug", fmt, args);
    va_end(args);
}

inline void log_info(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    vlog(LogLevel::Info, "info", fmt, args);
    va_end(args);
}

inline void log_warn(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    vlog(LogLevel::Warn, "warn", fmt, args);
    va_end(args);
}

}  // namespace fedhash
