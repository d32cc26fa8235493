#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "wips/common.hpp"
#include "wips/path.hpp"

namespace wips {

/// Eigenvalue family lambda_z of the trace-class noise
/// W(t,x) = sum_z lambda_z e_z(x) w_t^z, truncated at |z| <= m.
/// Either an explicit list over modes -m..m, or the parametric decay
/// lambda_z = c |z|^{-p} (z != 0, lambda_0 = 0).
class NoiseSpec {
public:
    static NoiseSpec from_lambdas(std::vector<double> lambdas) {
        if (lambdas.empty() || lambdas.size() % 2 == 0)
            throw DomainError("NoiseSpec: lambda list must cover modes -m..m");
        NoiseSpec s;
        s.lambdas_ = std::move(lambdas);
        s.m_ = static_cast<int>(s.lambdas_.size() / 2);
        bool any = false;
        for (double l : s.lambdas_) {
            if (l < 0.0)
                throw DomainError("NoiseSpec: lambdas must be non-negative");
            any = any || l > 0.0;
        }
        if (!any)
            throw DomainError("NoiseSpec: lambdas identically zero");
        return s;
    }

    static NoiseSpec decay(double c, double p, int m) {
        if (!(c > 0.0) || m < 1)
            throw DomainError("NoiseSpec: decay needs c > 0, m >= 1");
        NoiseSpec s;
        s.parametric_ = true;
        s.c_ = c;
        s.p_ = p;
        s.m_ = m;
        s.lambdas_.resize(2 * static_cast<std::size_t>(m) + 1);
        for (int z = -m; z <= m; ++z)
            s.lambdas_[static_cast<std::size_t>(z + m)] =
                z == 0 ? 0.0 : c * std::pow(std::abs(z), -p);
        return s;
    }

    int max_mode() const { return m_; }
    bool parametric() const { return parametric_; }
    double decay_exponent() const { return p_; }
    double decay_scale() const { return c_; }

    double lambda(int z) const {
        if (std::abs(z) > m_)
            return 0.0;
        return lambdas_[static_cast<std::size_t>(z + m_)];
    }

private:
    NoiseSpec() = default;
    std::vector<double> lambdas_;
    bool parametric_ = false;
    double c_ = 0.0, p_ = 0.0;
    int m_ = 0;
};

struct DecayCheckResult {
    bool ok = false;
    /// Partial sums sum_{|z| <= L} lambda_z^2 |z|^{4 delta} at L = 2^k.
    std::vector<std::pair<int, double>> partial_sums;
};

/// Square-summability check sum_z lambda_z^2 |z|^{4 delta} < infinity.
/// Finitely supported specs always pass; parametric decay passes iff
/// 2p - 4 delta > 1 (p-series test).
inline DecayCheckResult eigenvalue_decay_check(const NoiseSpec& spec,
                                               double delta) {
    if (!(delta > 0.0) || !(delta < 0.5))
        throw DomainError("eigenvalue_decay_check: delta must be in (0, 1/2)");
    DecayCheckResult res;
    res.ok = spec.parametric() ? (2.0 * spec.decay_exponent() - 4.0 * delta > 1.0)
                               : true;
    auto term = [&](int z) {
        double l;
        if (spec.parametric() && std::abs(z) > spec.max_mode())
            l = z == 0 ? 0.0
                       : spec.decay_scale() *
                             std::pow(std::abs(z), -spec.decay_exponent());
        else
            l = spec.lambda(z);
        return l * l * std::pow(std::abs(z), 4.0 * delta);
    };
    double sum = term(0);
    int z = 0;
    for (int k = 1; k <= 12; ++k) {
        const int L = 1 << k;
        for (; z < L; ) {
            ++z;
            sum += term(z) + term(-z);
        }
        res.partial_sums.emplace_back(L, sum);
    }
    return res;
}

/// sup over the time grid of sum_{|z| >= L} z^2 lambda_z^2 |I_z(t)|^2 with
/// I_z the heat convolution of the mode path; monotone non-increasing in L.
inline double tail_remainder(const NoiseSpec& spec,
                             const std::vector<SampledPath>& mode_paths,
                             int L, const std::vector<double>& tgrid) {
    if (L < 0)
        throw DomainError("tail_remainder: L must be non-negative");
    const int m = spec.max_mode();
    if (mode_paths.size() != 2 * static_cast<std::size_t>(m) + 1)
        throw DomainError("tail_remainder: need one path per mode -m..m");
    std::vector<double> sup_per_t(tgrid.size(), 0.0);
    for (int z = -m; z <= m; ++z) {
        if (std::abs(z) < L || spec.lambda(z) == 0.0)
            continue;
        const auto& path = mode_paths[static_cast<std::size_t>(z + m)];
        const double w = static_cast<double>(z) * z * spec.lambda(z) *
                         spec.lambda(z);
        for (std::size_t i = 0; i < tgrid.size(); ++i) {
            const double I = heat_convolution_mode(z, path, tgrid[i]);
            sup_per_t[i] += w * I * I;
        }
    }
    double sup = 0.0;
    for (double v : sup_per_t)
        sup = std::max(sup, v);
    return sup;
}

}  // namespace wips
