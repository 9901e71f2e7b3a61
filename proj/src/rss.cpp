#include "nextline/rss.hpp"

#include <unistd.h>

#include <fstream>
#include <string>

namespace nextline {

std::size_t resident_bytes(pid_t pid) {
  const std::string path = pid == 0 ? "/proc/self/statm" : "/proc/" + std::to_string(pid) + "/statm";
  std::ifstream in(path);
  std::size_t total_pages = 0, resident_pages = 0;
  if (!(in >> total_pages >> resident_pages)) return 0;
  return resident_pages * static_cast<std::size_t>(::sysconf(_SC_PAGESIZE));
}

RssSampler::RssSampler(pid_t pid, std::chrono::milliseconds period) : pid_(pid), period_(period) {
  sample();
  thread_ = std::thread([this] {
    while (running_.load()) {
      std::this_thread::sleep_for(period_);
      sample();
    }
  });
}

RssSampler::~RssSampler() { stop(); }

void RssSampler::sample() {
  const std::size_t now = resident_bytes(pid_);
  std::size_t prev = peak_.load();
  while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
  }
}

std::size_t RssSampler::stop() {
  if (running_.exchange(false)) {
    if (thread_.joinable()) thread_.join();
    sample();
  }
  return peak_.load();
}

}  // namespace nextline
