#ifndef PLATED_NDNUM_GRADCHECK_HPP
#define PLATED_NDNUM_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "plated/rng.hpp"
#include "plated/tensor.hpp"

namespace plated {

// Central finite differences against analytic gradients.
//
// `loss` must re-evaluate the scalar objective from current tensor contents
// on every call and must not carry state across calls; batch-norm running
// stats etc. have to live in copies inside the closure.

inline constexpr double kGradCheckStep = 1e-3;

// Coordinates where both |analytic| and |numeric| fall below this floor are
// skipped. At 32-bit precision the absolute noise on a central difference is
// roughly (forward rounding ~6e-8 * |downstream values|) / 2h ~ 1e-3, so a
// 1e-2 relative comparison is only meaningful for gradients above
// noise/tolerance ~ 0.1; below that the check would measure rounding, not
// correctness. A wrong backward pass still fails: its error shows up on the
// large coordinates too. The 64-bit build keeps a 1e-4 floor (curvature
// error territory) and is the tight correctness gate.
#ifdef PLATED_REAL64
inline constexpr double kGradCheckSignalFloor = 1e-4;
#else
inline constexpr double kGradCheckSignalFloor = 1e-1;
#endif

struct GradCheckTarget {
    Tensor* value;
    const Tensor* grad;  // analytic gradient, precomputed by the caller
};

// Max over sampled coordinates of |analytic - numeric| / max(|a|,|n|,1e-6).
// Samples at most max_coords coordinates per tensor (all, when small).
inline double grad_check(const std::function<double()>& loss, std::vector<GradCheckTarget> targets,
                         Rng& rng, std::size_t max_coords = 64,
                         double signal_floor = kGradCheckSignalFloor) {
    double worst = 0;
    for (auto& target : targets) {
        Tensor& value = *target.value;
        const Tensor& grad = *target.grad;
        std::vector<std::size_t> coords(value.size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        if (coords.size() > max_coords) {
            rng.shuffle(coords);
            coords.resize(max_coords);
        }
        for (std::size_t i : coords) {
            const real saved = value[i];
            value[i] = static_cast<real>(saved + kGradCheckStep);
            const double up = loss();
            value[i] = static_cast<real>(saved - kGradCheckStep);
            const double down = loss();
            value[i] = saved;
            const double numeric = (up - down) / (2.0 * kGradCheckStep);
            const double analytic = grad[i];
            if (std::abs(analytic) < signal_floor && std::abs(numeric) < signal_floor) continue;
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            worst = std::max(worst, std::abs(analytic - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace plated

#endif  // PLATED_NDNUM_GRADCHECK_HPP
