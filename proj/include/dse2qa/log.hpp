#pragma once

#include <functional>
#include <iostream>
#include <string>
#include <string_view>
#include <utility>

namespace dse2qa::log {

using Sink = std::function<void(std::string_view level, std::string_view msg)>;

inline Sink& sink() {
  static Sink s = [](std::string_view level, std::string_view msg) {
    std::cerr << "[" << level << "] " << msg << "\n";
  };
  return s;
}

// Replaces the global sink and returns the previous one.
inline Sink set_sink(Sink s) { return std::exchange(sink(), std::move(s)); }

inline void warn(std::string_view msg) { sink()("warn", msg); }
inline void info(std::string_view msg) { sink()("info", msg); }

// Restores the previous sink on scope exit; handy in tests.
class ScopedSink {
 public:
  explicit ScopedSink(Sink s) : prev_(set_sink(std::move(s))) {}
  ~ScopedSink() { set_sink(std::move(prev_)); }
  ScopedSink(const ScopedSink&) = delete;
  ScopedSink& operator=(const ScopedSink&) = delete;

 private:
  Sink prev_;
};

}  // namespace dse2qa::log
