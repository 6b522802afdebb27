#pragma once

#include "alphadyn/simd.hpp"

namespace alphadyn::simd::detail {

extern const KernelTable scalar_table;
#if defined(ALPHADYN_BUILD_AVX2)
extern const KernelTable avx2_table;
#endif

}  // namespace alphadyn::simd::detail
