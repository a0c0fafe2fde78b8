#include "impiss/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace impiss {
namespace {

struct Panel {
    double a, b, fa, fm, fb, whole;
};

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double refine(const std::function<double(double)>& f, const Panel& p, double eps, int depth) {
    const double m = 0.5 * (p.a + p.b);
    const double lm = 0.5 * (p.a + m);
    const double rm = 0.5 * (m + p.b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(p.a, m, p.fa, flm, p.fm);
    const double right = simpson(m, p.b, p.fm, frm, p.fb);
    const double delta = left + right - p.whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) {
        return left + right + delta / 15.0;
    }
    return refine(f, {p.a, m, p.fa, flm, p.fm, left}, 0.5 * eps, depth - 1) +
           refine(f, {m, p.b, p.fm, frm, p.fb, right}, 0.5 * eps, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        double panel_width, int max_depth) {
    if (a == b) return 0.0;
    const double sign = b > a ? 1.0 : -1.0;
    if (b < a) std::swap(a, b);

    const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / panel_width)));
    const double h = (b - a) / static_cast<double>(panels);
    std::vector<Panel> coarse;
    coarse.reserve(panels);
    double rough = 0.0;
    double f_left = f(a);
    for (std::size_t i = 0; i < panels; ++i) {
        const double pa = a + h * static_cast<double>(i);
        const double pb = i + 1 == panels ? b : a + h * static_cast<double>(i + 1);
        const double fm = f(0.5 * (pa + pb));
        const double fb = f(pb);
        const double s = simpson(pa, pb, f_left, fm, fb);
        coarse.push_back({pa, pb, f_left, fm, fb, s});
        rough += std::abs(s);
        f_left = fb;
    }
    // Internal target is a tenth of rel_tol.
    const double eps = 0.1 * rel_tol * std::max(rough, 1e-300) / static_cast<double>(panels);
    double total = 0.0;
    for (const auto& p : coarse) total += refine(f, p, eps, max_depth);
    return sign * total;
}

}  // namespace impiss
