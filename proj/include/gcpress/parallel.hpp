#pragma once

namespace gcpress {

/// Worker count used by the OpenMP kernels. Defaults to 1 so that runs are
/// reproducible out of the box; results are bitwise identical for any count.
int num_threads();
void set_num_threads(int n);

/// Reads GCPRESS_THREADS (default 1) and applies it.
int init_threads_from_env();

}  // namespace gcpress
