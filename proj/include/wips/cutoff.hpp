#pragma once

#include <cmath>

#include "wips/common.hpp"

namespace wips {

/// Lipschitz-1 cutoff chi_M: identity on [-M, M], zero outside [-2M, 2M],
/// linear bridge sign(a) (2M - |a|) in between.
struct CutoffParam {
    double M;
    explicit CutoffParam(double m) : M(m) {
        if (!(m > 0.0))
            throw DomainError("CutoffParam: M must be positive");
    }
};

inline double cutoff(const CutoffParam& p, double a) {
    const double abs_a = std::fabs(a);
    if (abs_a <= p.M)
        return a;
    if (abs_a >= 2.0 * p.M)
        return 0.0;
    return std::copysign(2.0 * p.M - abs_a, a);
}

inline double cutoff(double M, double a) { return cutoff(CutoffParam(M), a); }

}  // namespace wips
