#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <sys/types.h>
#include <thread>

namespace nextline {

/// Resident set size of `pid` (0 = this process) from /proc, in bytes.
/// Returns 0 if the process is gone or /proc is unavailable.
std::size_t resident_bytes(pid_t pid = 0);

/// Polls a process's resident set size on a background thread and keeps the
/// maximum seen. The default 50 ms period is 20 Hz.
class RssSampler {
 public:
  explicit RssSampler(pid_t pid = 0, std::chrono::milliseconds period = std::chrono::milliseconds(50));
  ~RssSampler();
  RssSampler(const RssSampler&) = delete;
  RssSampler& operator=(const RssSampler&) = delete;

  /// Stops polling (idempotent) and returns the peak.
  std::size_t stop();
  std::size_t peak() const { return peak_.load(); }

 private:
  void sample();

  pid_t pid_;
  std::chrono::milliseconds period_;
  std::atomic<bool> running_{true};
  std::atomic<std::size_t> peak_{0};
  std::thread thread_;
};

}  // namespace nextline
