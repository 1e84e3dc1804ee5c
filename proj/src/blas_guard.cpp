// OpenBLAS kernel selection guard.
//
// On some virtualized CPUs (recent Xeon models exposing AMX/AVX-512-FP16),
// OpenBLAS 0.3.x auto-detects a kernel family whose hand-written assembly
// produces silently wrong dgemm results. OPENBLAS_CORETYPE must be pinned
// before the library initializes, which happens in its own constructor, so
// OpenBLAS is linked statically and this constructor runs at a higher
// priority. An externally set OPENBLAS_CORETYPE is respected.
//
// spectral::diagonalize additionally runs a one-time numerical self-check of
// the full eigensolver path and aborts loudly rather than compute nonsense.

#include <cstdlib>

namespace {

__attribute__((constructor(101))) void pin_openblas_coretype() {
    ::setenv("OPENBLAS_CORETYPE", "SKYLAKEX", /*overwrite=*/0);
}

}  // namespace
