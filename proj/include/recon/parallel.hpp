#pragma once

namespace recon {

/// Execution mode for loops over independent work units (horizon columns,
/// simulation replications). `serial` is the reference implementation kept
/// for testing; `openmp` distributes the same units across threads. Units
/// never share mutable state, so both modes produce bitwise-identical
/// results.
enum class ExecMode { serial, openmp };

template <typename F>
void for_each_index(int count, ExecMode mode, F&& body) {
  if (mode == ExecMode::openmp) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < count; ++i) body(i);
  } else {
    for (int i = 0; i < count; ++i) body(i);
  }
}

}  // namespace recon
