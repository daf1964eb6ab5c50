#pragma once

#include "mdo/kernels.hpp"

namespace mdo::kernels {

#if defined(MDO_HAVE_AVX2)
// Defined in avx2.cpp, which is the only translation unit built with -mavx2 -mfma.
const KernelTable& avx2_table_unchecked() noexcept;
#endif

}  // namespace mdo::kernels
