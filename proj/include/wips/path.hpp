#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "wips/common.hpp"
#include "wips/rng.hpp"

namespace wips {

/// Real path on a time mesh, piecewise-linear in between.  Immutable after
/// construction.
class SampledPath {
public:
    SampledPath(std::vector<double> times, std::vector<double> values)
        : t_(std::move(times)), v_(std::move(values)) {
        if (t_.size() != v_.size() || t_.size() < 2)
            throw DomainError("SampledPath: need matching times/values, >= 2");
        for (std::size_t i = 1; i < t_.size(); ++i)
            if (!(t_[i] > t_[i - 1]))
                throw DomainError("SampledPath: times must strictly increase");
    }

    const std::vector<double>& times() const { return t_; }
    const std::vector<double>& values() const { return v_; }
    double t0() const { return t_.front(); }
    double horizon() const { return t_.back(); }
    std::size_t size() const { return t_.size(); }

    /// Piecewise-linear interpolant; clamped at the ends.
    double operator()(double t) const {
        if (t <= t_.front())
            return v_.front();
        if (t >= t_.back())
            return v_.back();
        const auto it = std::upper_bound(t_.begin(), t_.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - t_.begin());
        const double w = (t - t_[i - 1]) / (t_[i] - t_[i - 1]);
        return v_[i - 1] + w * (v_[i] - v_[i - 1]);
    }

    double increment(double s, double t) const { return (*this)(t) - (*this)(s); }

private:
    std::vector<double> t_;
    std::vector<double> v_;
};

/// Standard Brownian sample on the uniform mesh of step dt: B_0 = 0,
/// independent N(0, dt) increments drawn from the given substream.
inline SampledPath sample_brownian(double T, double dt, const Substream& s) {
    if (!(dt > 0.0) || !(dt <= T))
        throw DomainError("sample_brownian: need 0 < dt <= T");
    const std::size_t n = static_cast<std::size_t>(std::llround(T / dt));
    const double step = T / static_cast<double>(n);
    std::vector<double> t(n + 1), v(n + 1);
    t[0] = 0.0;
    v[0] = 0.0;
    const double sd = std::sqrt(step);
    for (std::size_t k = 0; k < n; ++k) {
        t[k + 1] = (k + 1 == n) ? T : step * static_cast<double>(k + 1);
        v[k + 1] = v[k] + sd * s.normal(k);
    }
    return SampledPath(std::move(t), std::move(v));
}

/// Piecewise-linear interpolation of p on the uniform mesh {j T / kappa}.
/// Agrees with p exactly at the mesh nodes.
inline SampledPath piecewise_linear_approx(const SampledPath& p, int kappa) {
    if (kappa < 1)
        throw DomainError("piecewise_linear_approx: kappa >= 1 required");
    const double T = p.horizon();
    std::vector<double> t(static_cast<std::size_t>(kappa) + 1),
        v(static_cast<std::size_t>(kappa) + 1);
    for (int j = 0; j <= kappa; ++j) {
        t[static_cast<std::size_t>(j)] =
            (j == kappa) ? T : T * static_cast<double>(j) / kappa;
        v[static_cast<std::size_t>(j)] = p(t[static_cast<std::size_t>(j)]);
    }
    return SampledPath(std::move(t), std::move(v));
}

/// C^gamma seminorm over sampled node pairs.  Node count is capped at 2000
/// by stride subsampling (always keeping the first and last node).
inline double holder_seminorm(const SampledPath& p, double gamma) {
    if (!(gamma > 0.0) || gamma > 1.0)
        throw DomainError("holder_seminorm: gamma must lie in (0, 1]");
    const std::size_t n = p.size();
    const std::size_t cap = 2000;
    std::vector<std::size_t> idx;
    if (n <= cap) {
        idx.resize(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    } else {
        const std::size_t stride = (n + cap - 1) / cap;
        for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
        if (idx.back() != n - 1) idx.push_back(n - 1);
    }
    const auto& t = p.times();
    const auto& v = p.values();
    double best = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            const double dt = t[idx[b]] - t[idx[a]];
            const double dv = std::fabs(v[idx[b]] - v[idx[a]]);
            best = std::max(best, dv / std::pow(dt, gamma));
        }
    return best;
}

/// Left-endpoint Riemann-Stieltjes sum of f against Y over the union mesh of
/// both paths (the Young-integral limit for the regularities produced here).
inline double rs_integral(const SampledPath& f, const SampledPath& Y) {
    if (std::fabs(f.t0() - Y.t0()) > 1e-12 ||
        std::fabs(f.horizon() - Y.horizon()) > 1e-12)
        throw DomainError("rs_integral: domains do not match");
    std::vector<double> mesh;
    mesh.reserve(f.size() + Y.size());
    std::merge(f.times().begin(), f.times().end(), Y.times().begin(),
               Y.times().end(), std::back_inserter(mesh));
    mesh.erase(std::unique(mesh.begin(), mesh.end()), mesh.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < mesh.size(); ++i)
        acc += f(mesh[i]) * (Y(mesh[i + 1]) - Y(mesh[i]));
    return acc;
}

namespace detail {
/// One exact step of I <- e^{-z^2 h} I + r (1 - e^{-z^2 h}) / z^2 with
/// r = dY/h; exact when Y is linear on the step.
inline double heat_mode_advance(double value, double z2, double dY, double h) {
    if (z2 == 0.0)
        return value + dY;
    const double w = z2 * h;
    const double decay = std::exp(-w);
    const double rise = -std::expm1(-w) / z2;  // (1 - e^{-w}) / z^2
    return value * decay + (dY / h) * rise;
}
}  // namespace detail

/// I_z(t) = int_0^t e^{-(t-s) z^2} dY_s via the exact per-segment recurrence.
inline double heat_convolution_mode(int z, const SampledPath& Y, double t) {
    if (t < Y.t0() || t > Y.horizon() + 1e-12)
        throw DomainError("heat_convolution_mode: t outside path domain");
    const double z2 = static_cast<double>(z) * static_cast<double>(z);
    const auto& times = Y.times();
    const auto& vals = Y.values();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double s0 = times[i];
        if (s0 >= t)
            break;
        const double s1 = std::min(times[i + 1], t);
        const double h = s1 - s0;
        if (h <= 0.0)
            break;
        const double dY =
            (vals[i + 1] - vals[i]) * (h / (times[i + 1] - times[i]));
        acc = detail::heat_mode_advance(acc, z2, dY, h);
    }
    return acc;
}

/// CSV serialization: header "t,value".
inline void write_path_csv(const SampledPath& p, std::ostream& os) {
    os << "t,value\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.times()[i],
                      p.values()[i]);
        os << buf;
    }
}

inline SampledPath read_path_csv(std::istream& is) {
    std::string line;
    std::getline(is, line);
    std::vector<double> t, v;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        const auto comma = line.find(',');
        t.push_back(std::stod(line.substr(0, comma)));
        v.push_back(std::stod(line.substr(comma + 1)));
    }
    return SampledPath(std::move(t), std::move(v));
}

}  // namespace wips
