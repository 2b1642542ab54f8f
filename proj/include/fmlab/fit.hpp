#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fmlab/config.hpp"

namespace fmlab {

struct ScanSeries {
    std::string label;
    std::vector<double> param;
    std::vector<double> value;
    std::vector<double> zero_params;  // points whose value was exactly zero

    ScanSeries() = default;
    explicit ScanSeries(std::string l) : label(std::move(l)) {}

    void push(double p, double v) {
        if (v == 0.0) {
            zero_params.push_back(p);
            return;
        }
        param.push_back(p);
        value.push_back(v);
    }
    std::size_t size() const { return param.size(); }
};

struct ExponentFit {
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
    int n_points = 0;
    double slope_stderr = 0;
};

// Ordinary least squares y = a + b x.
inline ExponentFit ols(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    require(n >= 2 && y.size() == n, "ols: need at least two paired points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0, "ols: parameters are all equal");
    ExponentFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.n_points = int(n);
    double ssr = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = y[i] - f.intercept - f.slope * x[i];
        ssr += e * e;
    }
    // A flat series is fitted exactly by slope 0.
    f.r_squared = syy > 1e-300 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
    f.slope_stderr = n > 2 ? std::sqrt(ssr / double(n - 2) / sxx) : 0.0;
    return f;
}

inline ExponentFit loglog_fit(const ScanSeries& s) {
    require(s.size() >= 4, "loglog_fit: need at least 4 positive points (" + s.label + ")");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < s.size(); ++i) {
        require(s.param[i] > 0 && s.value[i] > 0, "loglog_fit: nonpositive entry (" + s.label + ")");
        lx.push_back(std::log(s.param[i]));
        ly.push_back(std::log(s.value[i]));
    }
    return ols(lx, ly);
}

enum class Divergence { convergent, divergent, inconclusive };

inline const char* to_string(Divergence d) {
    switch (d) {
        case Divergence::convergent: return "convergent";
        case Divergence::divergent: return "divergent";
        default: return "inconclusive";
    }
}

struct DivergenceReport {
    Divergence verdict = Divergence::inconclusive;
    std::string mode;       // power, logarithmic, summable, stationary, raw
    ExponentFit growth;     // log value vs log parameter
    ExponentFit increment;  // log (dS / dlog p) vs log p, when the series is monotone
    bool has_increment = false;
};

// Classifies a series of partial sums (or any positive series) as the
// parameter grows.  Monotone series are judged by the decay exponent of
// their increments per unit log-parameter: exponents above -margin mean
// unbounded growth (logarithmic when the exponent is near zero, confirmed by
// a linear fit of the value against log parameter).  Non-monotone series
// fall back to the plain log-log slope.
inline DivergenceReport classify_divergence(const ScanSeries& s, const FitConfig& cfg = fit_config) {
    require(s.size() >= 4, "classify_divergence: need at least 4 points (" + s.label + ")");
    for (std::size_t i = 1; i < s.size(); ++i)
        require(s.param[i] > s.param[i - 1], "classify_divergence: parameters must increase");
    DivergenceReport rep;
    rep.growth = loglog_fit(s);

    bool monotone = true;
    for (std::size_t i = 1; i < s.size(); ++i) monotone = monotone && s.value[i] >= s.value[i - 1];

    if (!monotone) {
        rep.mode = "raw";
        if (rep.growth.slope > cfg.slope_tol && rep.growth.r_squared >= cfg.r2_min)
            rep.verdict = Divergence::divergent;
        else if (std::abs(rep.growth.slope) <= cfg.slope_tol)
            rep.verdict = Divergence::convergent;
        return rep;
    }

    const double scale = s.value.back();
    const double zero_tol = 1e-13 * scale;
    std::vector<double> lx, ly;
    double last_inc = 0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double dl = std::log(s.param[i + 1]) - std::log(s.param[i]);
        const double inc = (s.value[i + 1] - s.value[i]) / dl;
        last_inc = inc;
        if (inc > zero_tol) {
            lx.push_back(0.5 * (std::log(s.param[i + 1]) + std::log(s.param[i])));
            ly.push_back(std::log(inc));
        }
    }
    if (last_inc <= zero_tol) {
        rep.mode = "stationary";
        rep.verdict = Divergence::convergent;
        return rep;
    }
    if (lx.size() < 3) {
        rep.mode = "sparse";
        return rep;
    }
    rep.increment = ols(lx, ly);
    rep.has_increment = true;
    const double a = rep.increment.slope;
    if (a > cfg.slope_tol) {
        rep.mode = "power";
        if (rep.increment.r_squared >= cfg.r2_min || rep.growth.r_squared >= cfg.r2_min)
            rep.verdict = Divergence::divergent;
    } else if (a >= -cfg.increment_margin) {
        rep.mode = "logarithmic";
        std::vector<double> logp;
        for (double p : s.param) logp.push_back(std::log(p));
        auto lin = ols(logp, s.value);
        if (lin.slope > 0 && lin.r_squared >= cfg.r2_min) rep.verdict = Divergence::divergent;
    } else {
        rep.mode = "summable";
        if (rep.increment.r_squared >= cfg.r2_min || a < -2 * cfg.slope_tol)
            rep.verdict = Divergence::convergent;
    }
    return rep;
}

enum class Trend { stable, growing, vanishing, inconclusive };

inline const char* to_string(Trend t) {
    switch (t) {
        case Trend::stable: return "stable";
        case Trend::growing: return "growing";
        case Trend::vanishing: return "vanishing";
        default: return "inconclusive";
    }
}

// Plain slope reading of a series that need not be monotone.
inline Trend classify_trend(const ExponentFit& f, const FitConfig& cfg = fit_config) {
    if (std::abs(f.slope) <= cfg.slope_tol) return Trend::stable;
    if (f.r_squared < cfg.r2_min) return Trend::inconclusive;
    return f.slope > 0 ? Trend::growing : Trend::vanishing;
}

}  // namespace fmlab
