#include <cstdlib>
#include <string_view>

#include "nextline/kernels.hpp"

namespace nextline::kernels {

const KernelTable& active() {
  static const KernelTable& table = [] () -> const KernelTable& {
    const char* forced = std::getenv("NEXTLINE_SIMD");
    if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
    if (const KernelTable* simd = avx2_kernels()) return *simd;
    return scalar_kernels();
  }();
  return table;
}

}  // namespace nextline::kernels
