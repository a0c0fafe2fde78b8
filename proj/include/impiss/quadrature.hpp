#pragma once

#include <functional>

namespace impiss {

inline constexpr int kSimpsonMaxDepth = 40;

/// Adaptive Simpson with Richardson correction. The interval is first cut
/// into panels no wider than `panel_width`; each panel is refined until
/// |S_2 - S_1| <= 15 * rel_tol * |estimate of the whole integral| / panels,
/// or the depth cap is reached.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        double panel_width = 0.5, int max_depth = kSimpsonMaxDepth);

}  // namespace impiss
