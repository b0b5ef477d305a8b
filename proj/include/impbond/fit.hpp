#pragma once

// Least-squares slope estimation in log-log coordinates, used for all
// convergence-order fits. Fits need at least four points; callers report
// "n/a" otherwise.

#include <cmath>
#include <optional>
#include <vector>

namespace impbond {

template <typename Scalar>
struct FitResult {
    Scalar slope = 0;
    Scalar intercept = 0;
    Scalar slope_stderr = 0;
    int points = 0;
};

template <typename Scalar>
std::optional<FitResult<Scalar>> fit_loglog(const std::vector<Scalar>& xs,
                                            const std::vector<Scalar>& ys) {
    if (xs.size() != ys.size() || xs.size() < 4) return std::nullopt;
    const int n = static_cast<int>(xs.size());
    Scalar sx = 0, sy = 0;
    std::vector<Scalar> lx(n), ly(n);
    for (int i = 0; i < n; ++i) {
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const Scalar mx = sx / n, my = sy / n;
    Scalar sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    FitResult<Scalar> fit;
    fit.points = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    Scalar ssr = 0;
    for (int i = 0; i < n; ++i) {
        const Scalar resid = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ssr += resid * resid;
    }
    fit.slope_stderr = (n > 2) ? std::sqrt(ssr / Scalar(n - 2) / sxx) : Scalar(0);
    return fit;
}

}  // namespace impbond
