#pragma once

#include <cstddef>

namespace mfrnn {

/// Process-wide warning counters (atomic).
void note_atanh_clamp();
std::size_t atanh_clamp_count();
void note_sigma_clamp();
std::size_t sigma_clamp_count();
void reset_warning_counts();

}  // namespace mfrnn
