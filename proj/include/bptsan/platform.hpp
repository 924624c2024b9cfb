#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace bptsan {

/// Keeps large tensor buffers on the heap instead of fresh mmap pages.
/// A training step allocates and frees many batch-sized tensors; with
/// glibc's default thresholds each one is returned to the kernel and faulted
/// back in on the next step, which doubled the step time. Call once at process
/// start; a no-op on other C libraries.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

}  // namespace bptsan
