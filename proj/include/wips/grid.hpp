#pragma once

#include <cstddef>

#include "wips/common.hpp"

namespace wips {

/// Uniform grid on the torus [0, 2*pi): nodes x_j = j * spacing.
class TorusGrid {
public:
    explicit TorusGrid(std::size_t n_points) : n_(n_points) {
        if (n_ < 8 || n_ % 2 != 0)
            throw DomainError("TorusGrid: n_points must be even and >= 8");
    }

    std::size_t size() const { return n_; }
    double spacing() const { return two_pi / static_cast<double>(n_); }
    double node(std::size_t j) const {
        return static_cast<double>(j) * spacing();
    }
    /// Largest resolvable mode (Nyquist), n/2.
    int nyquist() const { return static_cast<int>(n_ / 2); }

    friend bool operator==(const TorusGrid& a, const TorusGrid& b) {
        return a.n_ == b.n_;
    }
    friend bool operator!=(const TorusGrid& a, const TorusGrid& b) {
        return a.n_ != b.n_;
    }

private:
    std::size_t n_;
};

}  // namespace wips
