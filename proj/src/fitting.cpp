#include "qfdt/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qfdt::fitting {

namespace {

constexpr int kMaxIterations = 200;
constexpr double kRelTol = 1e-10;

double series_variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (const double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (const double x : v) var += (x - mean) * (x - mean);
    return var / static_cast<double>(v.size());
}

}  // namespace

FitResult fit_gamma(const TimeSeries& measured, const TimeSeries& free_series,
                    double long_time_avg) {
    measured.validate();
    free_series.validate();
    const std::size_t n = measured.size();
    if (n < 50) throw std::invalid_argument("fit_gamma: need at least 50 samples");
    if (free_series.size() != n) {
        throw std::invalid_argument("fit_gamma: series do not share a time grid");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(measured.times[i] - free_series.times[i]) >
            1e-12 * std::max(1.0, std::abs(measured.times[i]))) {
            throw std::invalid_argument("fit_gamma: series do not share a time grid");
        }
    }
    if (series_variance(measured.values) < 1e-14) {
        throw std::invalid_argument("fit_gamma: degenerate input (flat measured series)");
    }

    const auto& t = measured.times;
    const double t_max = t.back();
    double t_min_pos = t_max;
    for (const double ti : t) {
        if (ti > 0.0) {
            t_min_pos = ti;
            break;
        }
    }
    if (t_max <= 0.0) throw std::invalid_argument("fit_gamma: need positive times");

    auto chi_sq = [&](double gamma) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double decay = std::exp(-2.0 * gamma * t[i]);
            const double r = measured.values[i] - long_time_avg -
                             (free_series.values[i] - long_time_avg) * decay;
            acc += r * r;
        }
        return acc;
    };

    // coarse log-spaced search, then damped Gauss-Newton refinement
    const double g_lo = 1.0 / t_max;
    const double g_hi = 10.0 / t_min_pos;
    double gamma = g_lo;
    double best = chi_sq(gamma);
    for (int k = 0; k < 20; ++k) {
        const double g = g_lo * std::pow(g_hi / g_lo, k / 19.0);
        const double c = chi_sq(g);
        if (c < best) {
            best = c;
            gamma = g;
        }
    }

    double damping = 1e-3;
    int iterations = 0;
    bool converged = false;
    double jtj = 0.0;
    while (iterations < kMaxIterations) {
        ++iterations;
        double jtr = 0.0;
        jtj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double decay = std::exp(-2.0 * gamma * t[i]);
            const double f = (free_series.values[i] - long_time_avg);
            const double r = measured.values[i] - long_time_avg - f * decay;
            const double dr = 2.0 * t[i] * f * decay;  // d r / d gamma
            jtr += dr * r;
            jtj += dr * dr;
        }
        if (jtj <= 0.0) break;
        const double step = -jtr / (jtj * (1.0 + damping));
        const double candidate = gamma + step;
        if (candidate > 0.0 && chi_sq(candidate) <= best) {
            best = chi_sq(candidate);
            gamma = candidate;
            damping = std::max(damping / 10.0, 1e-12);
            if (std::abs(step) < kRelTol * std::abs(gamma)) {
                converged = true;
                break;
            }
        } else {
            damping *= 10.0;
            if (damping > 1e12) break;
        }
    }

    FitResult result;
    result.parameters["gamma"] = gamma;
    result.residual_rms = std::sqrt(best / static_cast<double>(n));
    result.converged = converged;
    result.iterations = iterations;
    if (jtj > 0.0 && n > 1) {
        result.covariance_diag["gamma"] = best / static_cast<double>(n - 1) / jtj;
    }
    return result;
}

FitResult fit_lorentzian(const SmoothedProfile& profile) {
    const std::size_t n = profile.energy_grid.size();
    if (n < 10) throw std::invalid_argument("fit_lorentzian: need at least 10 grid points");
    const auto& x = profile.energy_grid;
    const auto& y = profile.values;

    std::size_t imax = 0;
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] > peak) {
            peak = y[i];
            imax = i;
        }
        if (y[i] < 0.0) throw std::invalid_argument("fit_lorentzian: negative profile value");
    }
    if (peak <= 0.0) throw std::invalid_argument("fit_lorentzian: degenerate input (all zero)");

    // half-width estimate from the half-maximum crossings
    double left = x.front(), right = x.back();
    for (std::size_t i = imax; i-- > 0;) {
        if (y[i] <= 0.5 * peak) {
            left = x[i];
            break;
        }
    }
    for (std::size_t i = imax + 1; i < n; ++i) {
        if (y[i] <= 0.5 * peak) {
            right = x[i];
            break;
        }
    }
    double width = std::max(0.5 * (right - left), (x.back() - x.front()) / (10.0 * n));
    double center = x[imax];
    double amplitude = peak * std::numbers::pi * width;

    auto chi_sq = [&](double a, double c, double w) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = (x[i] - c) * (x[i] - c) + w * w;
            const double r = y[i] - a * (w / std::numbers::pi) / d;
            acc += r * r;
        }
        return acc;
    };

    double best = chi_sq(amplitude, center, width);
    double damping = 1e-3;
    int iterations = 0;
    bool converged = false;
    while (iterations < kMaxIterations) {
        ++iterations;
        Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
        Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = x[i] - center;
            const double d = dx * dx + width * width;
            const double model = amplitude * (width / std::numbers::pi) / d;
            const double r = y[i] - model;
            Eigen::Vector3d grad;  // of the model
            grad[0] = (width / std::numbers::pi) / d;
            grad[1] = amplitude * (width / std::numbers::pi) * 2.0 * dx / (d * d);
            grad[2] = amplitude / std::numbers::pi * (dx * dx - width * width) / (d * d);
            jtj += grad * grad.transpose();
            jtr += grad * r;
        }
        Eigen::Matrix3d damped = jtj;
        damped.diagonal() *= (1.0 + damping);
        const Eigen::Vector3d step = damped.ldlt().solve(jtr);
        const double a_new = amplitude + step[0];
        const double c_new = center + step[1];
        const double w_new = width + step[2];
        if (w_new > 0.0 && chi_sq(a_new, c_new, w_new) <= best) {
            best = chi_sq(a_new, c_new, w_new);
            const double rel = std::max({std::abs(step[0]) / (std::abs(amplitude) + 1e-300),
                                         std::abs(step[1]) / (std::abs(center) + width),
                                         std::abs(step[2]) / width});
            amplitude = a_new;
            center = c_new;
            width = w_new;
            damping = std::max(damping / 10.0, 1e-12);
            if (rel < kRelTol) {
                converged = true;
                break;
            }
        } else {
            damping *= 10.0;
            if (damping > 1e12) break;
        }
    }

    FitResult result;
    result.parameters["amplitude"] = amplitude;
    result.parameters["center"] = center;
    result.parameters["width"] = width;
    result.residual_rms = std::sqrt(best / static_cast<double>(n));
    result.converged = converged && width > 0.0;
    result.iterations = iterations;
    return result;
}

double deconvolved_gamma(const FitResult& fit, double kernel_eps, WidthConvention conv) {
    const double w = fit.parameters.at("width") - kernel_eps;
    return conv == WidthConvention::ldos ? w : 0.5 * w;
}

std::size_t decay_fit_window(const TimeSeries& measured, double avg, double delta_sq_est) {
    measured.validate();
    const double band = 2.0 * std::sqrt(std::max(delta_sq_est, 0.0));
    std::size_t consecutive = 0;
    for (std::size_t i = 0; i < measured.size(); ++i) {
        if (std::abs(measured.values[i] - avg) <= band) {
            if (++consecutive >= 50) return i + 1;
        } else {
            consecutive = 0;
        }
    }
    return measured.size();
}

}  // namespace qfdt::fitting
