// fitting.hpp — nonlinear least squares: decay-rate extraction from quench
// traces and Lorentzian fits to spectral profiles.
//
// The optimizer is a damped Gauss-Newton (Levenberg-style schedule: damping
// starts at 1e-3, x10 on a rejected step, /10 on an accepted one), at most
// 200 iterations, converged when the relative parameter change drops below
// 1e-10. Initialization is deterministic, so fits are reproducible.

#pragma once

#include "qfdt/dynamics.hpp"
#include "qfdt/spectral.hpp"

#include <map>
#include <string>

namespace qfdt::fitting {

using dynamics::TimeSeries;
using spectral::SmoothedProfile;

struct FitResult {
    std::map<std::string, double> parameters;
    std::map<std::string, double> covariance_diag;
    double residual_rms = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Fits Gamma in  m(t) = free(t) exp(-2 Gamma t) + avg (1 - exp(-2 Gamma t)).
// Both series must share a time grid with >= 50 points; the caller supplies a
// horizon long enough to span the decay. Gamma is initialized by a coarse
// search over 20 log-spaced values in [1/t_max, 10/t_min] and then refined.
// Throws std::invalid_argument on degenerate input (variance < 1e-14).
FitResult fit_gamma(const TimeSeries& measured, const TimeSeries& free_series,
                    double long_time_avg);

// Fits amplitude (integrated mass), center, and width (HWHM) of
// L(x) = amplitude (width/pi) / ((x - center)^2 + width^2).
// Requires >= 10 grid points; an all-zero profile is a degenerate input.
FitResult fit_lorentzian(const SmoothedProfile& profile);

// Width bookkeeping for kernel-smoothed profiles: Lorentzian widths add under
// convolution, so the intrinsic width is (fitted - kernel_eps), and strength
// functions carry the 2*Gamma convention.
enum class WidthConvention { ldos, strength_function };
double deconvolved_gamma(const FitResult& fit, double kernel_eps, WidthConvention conv);

// Deterministic fit-window rule for decay traces: include samples from t = 0
// until the series has stayed within 2 sqrt(delta_sq_est) of `avg` for 50
// consecutive samples; capped at the full series. Returns the sample count.
std::size_t decay_fit_window(const TimeSeries& measured, double avg, double delta_sq_est);

}  // namespace qfdt::fitting
