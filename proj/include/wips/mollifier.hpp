#pragma once

#include <cmath>
#include <vector>

#include "wips/common.hpp"

namespace wips {

/// log I_0(u) for u > 0.  Power series sum_k (u/2)^{2k} / (k!)^2 up to
/// u = 20; beyond that the standard large-argument expansion
/// log I_0(u) = u - log(2 pi u)/2 + log(sum_k a_k u^-k), carried to enough
/// terms that the two branches agree to ~1e-13 at the switch point.
inline double bessel_i0_log(double u) {
    if (!(u > 0.0))
        throw DomainError("bessel_i0_log: argument must be positive");
    if (u <= 20.0) {
        const double q = 0.25 * u * u;
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 200; ++k) {
            term *= q / (static_cast<double>(k) * static_cast<double>(k));
            sum += term;
            if (term < 1e-16 * sum)
                break;
        }
        return std::log(sum);
    }
    // a_k = ((2k-1)!!)^2 / (k! 8^k)
    double a = 1.0, tail = 1.0, upow = 1.0;
    for (int k = 1; k <= 13; ++k) {
        const double odd = 2.0 * k - 1.0;
        a *= odd * odd / (8.0 * k);
        upow *= u;
        tail += a / upow;
    }
    return u - 0.5 * std::log(two_pi * u) + std::log(tail);
}

/// Ratios I_k(u)/I_0(u), k = 0..kmax, by Miller's downward recurrence.
/// Stable for all u > 0; no overflow since only ratios are formed.
inline std::vector<double> bessel_i_ratios(double u, int kmax) {
    if (!(u > 0.0))
        throw DomainError("bessel_i_ratios: argument must be positive");
    const int start = kmax + 40 + static_cast<int>(std::ceil(u));
    std::vector<double> r(static_cast<std::size_t>(start) + 1, 0.0);
    double t = 0.0;
    for (int k = start; k >= 1; --k) {
        t = 1.0 / (2.0 * k / u + t);
        r[static_cast<std::size_t>(k)] = t;  // I_k / I_{k-1}
    }
    std::vector<double> out(static_cast<std::size_t>(kmax) + 1);
    out[0] = 1.0;
    double prod = 1.0;
    for (int k = 1; k <= kmax; ++k) {
        prod *= r[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(k)] = prod;
    }
    return out;
}

/// Von Mises mollifier Phi_eps(x) = exp(cos(x)/eps) / (2 pi I_0(1/eps)),
/// mean zero, concentration 1/eps.  The normalizer is cached at
/// construction; evaluation is two libm calls.
struct MollifierParam {
    double epsilon;
    double log_norm;  // log(2 pi I_0(1/eps))
    double norm;      // 2 pi I_0(1/eps); overflows for tiny eps, unused there
    explicit MollifierParam(double eps) : epsilon(eps) {
        if (!(eps > 0.0))
            throw DomainError("MollifierParam: epsilon must be positive");
        log_norm = std::log(two_pi) + bessel_i0_log(1.0 / eps);
        norm = eps >= 0.2 ? two_pi * std::exp(bessel_i0_log(1.0 / eps)) : 0.0;
    }
};

inline double mollifier_eval(const MollifierParam& p, double x) {
    if (p.epsilon >= 0.2)
        return std::exp(std::cos(x) / p.epsilon) / p.norm;
    // log-domain: e^{1/eps} overflows long before eps reaches interesting values
    return std::exp(std::cos(x) / p.epsilon - p.log_norm);
}

/// Pointwise lower bound m_eps = e^{-1/eps} / (2 pi I_0(1/eps)).
inline double mollifier_floor(const MollifierParam& p) {
    if (p.epsilon >= 0.2)
        return std::exp(-1.0 / p.epsilon) / p.norm;
    return std::exp(-1.0 / p.epsilon - p.log_norm);
}

/// Sup bound M_eps = e^{1/eps} / (2 pi I_0(1/eps)).
inline double mollifier_sup(const MollifierParam& p) {
    return std::exp(1.0 / p.epsilon - p.log_norm);
}

/// Derivative bound D_eps = e^{1/eps} / (2 pi eps I_0(1/eps)).
inline double mollifier_deriv_bound(const MollifierParam& p) {
    return std::exp(1.0 / p.epsilon - p.log_norm - std::log(p.epsilon));
}

/// Fourier coefficients of Phi_eps in the e^{ikx} convention:
/// hat Phi_eps(k) = I_k(1/eps) / (2 pi I_0(1/eps)), k = 0..kmax.
inline std::vector<double> mollifier_fourier(const MollifierParam& p, int kmax) {
    auto ratios = bessel_i_ratios(1.0 / p.epsilon, kmax);
    for (double& r : ratios)
        r /= two_pi;
    return ratios;
}

}  // namespace wips
