#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wips/common.hpp"
#include "wips/fft.hpp"
#include "wips/grid.hpp"

namespace wips {

/// Orthonormal real Fourier basis of L^2(T): sin(zx)/sqrt(pi) for z > 0,
/// 1/sqrt(2 pi) for z = 0, cos(zx)/sqrt(pi) for z < 0.
inline double basis_eval(int z, double x) {
    if (z > 0)
        return std::sin(z * x) / std::sqrt(pi);
    if (z == 0)
        return 1.0 / std::sqrt(two_pi);
    return std::cos(z * x) / std::sqrt(pi);
}

/// Real function on the torus grid with a synchronized spectral
/// representation.  The spectrum is the half-complex array c_k,
/// k = 0..n/2, with f(x_j) = sum_k c_k e^{i k x_j} over the full
/// conjugate-symmetric range.  Immutable after construction.
class Field {
public:
    Field(TorusGrid grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw DomainError("Field: value count does not match grid");
        detail::FftEngine::instance().forward(values_, spectrum_);
        sanitize_spectrum();
        cache_eval_modes();
    }

    static Field from_spectrum(TorusGrid grid,
                               std::vector<std::complex<double>> spec) {
        if (spec.size() != grid.size() / 2 + 1)
            throw DomainError("Field: spectrum size does not match grid");
        return Field(grid, std::move(spec), 0);
    }

    static Field zero(TorusGrid grid) {
        return Field(grid, std::vector<double>(grid.size(), 0.0));
    }

    static Field constant(TorusGrid grid, double c) {
        return Field(grid, std::vector<double>(grid.size(), c));
    }

    template <class Fn>
    static Field sample(TorusGrid grid, Fn&& fn) {
        std::vector<double> v(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j)
            v[j] = fn(grid.node(j));
        return Field(grid, std::move(v));
    }

    static Field basis(TorusGrid grid, int z) {
        return sample(grid, [z](double x) { return basis_eval(z, x); });
    }

    const TorusGrid& grid() const { return grid_; }
    std::size_t size() const { return grid_.size(); }
    const std::vector<double>& values() const { return values_; }
    const std::vector<std::complex<double>>& spectrum() const {
        return spectrum_;
    }

    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }
    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::fabs(v));
        return m;
    }

    /// Trigonometric interpolation at an arbitrary point.  Modes with
    /// negligible coefficients are skipped; the cut is fixed at
    /// construction, so evaluation is a pure function of (field, x).
    double value_at(double x) const {
        const double c = std::cos(x);
        const double s = std::sin(x);
        double ck = 1.0, sk = 0.0;  // cos(kx), sin(kx) for k = 0
        double acc = spectrum_[0].real();
        const int kmax = eval_modes_;
        const int ny = grid_.nyquist();
        for (int k = 1; k <= kmax; ++k) {
            const double cn = ck * c - sk * s;
            const double sn = sk * c + ck * s;
            ck = cn;
            sk = sn;
            const double re = spectrum_[k].real();
            const double im = spectrum_[k].imag();
            if (k < ny)
                acc += 2.0 * (re * ck - im * sk);
            else
                acc += re * ck;
        }
        return acc;
    }

    friend Field operator+(const Field& a, const Field& b) {
        a.check_same_grid(b);
        std::vector<double> v(a.size());
        for (std::size_t j = 0; j < a.size(); ++j)
            v[j] = a.values_[j] + b.values_[j];
        return Field(a.grid_, std::move(v));
    }
    friend Field operator-(const Field& a, const Field& b) {
        a.check_same_grid(b);
        std::vector<double> v(a.size());
        for (std::size_t j = 0; j < a.size(); ++j)
            v[j] = a.values_[j] - b.values_[j];
        return Field(a.grid_, std::move(v));
    }
    friend Field operator*(double c, const Field& a) {
        std::vector<double> v(a.size());
        for (std::size_t j = 0; j < a.size(); ++j)
            v[j] = c * a.values_[j];
        return Field(a.grid_, std::move(v));
    }

    void check_same_grid(const Field& other) const {
        if (grid_ != other.grid_)
            throw DomainError("Field: grid mismatch");
    }

private:
    Field(TorusGrid grid, std::vector<std::complex<double>> spec, int)
        : grid_(grid), spectrum_(std::move(spec)) {
        sanitize_spectrum();
        detail::FftEngine::instance().inverse(spectrum_, grid_.size(), values_);
        cache_eval_modes();
    }

    void sanitize_spectrum() {
        // DC and Nyquist coefficients of a real field are real.
        spectrum_.front() = {spectrum_.front().real(), 0.0};
        spectrum_.back() = {spectrum_.back().real(), 0.0};
    }

    void cache_eval_modes() {
        double mx = 0.0;
        for (const auto& c : spectrum_) mx = std::max(mx, std::abs(c));
        int kmax = 0;
        for (int k = 0; k < static_cast<int>(spectrum_.size()); ++k)
            if (std::abs(spectrum_[k]) > 1e-15 * mx)
                kmax = k;
        eval_modes_ = kmax;
    }

    TorusGrid grid_;
    std::vector<double> values_;
    std::vector<std::complex<double>> spectrum_;
    int eval_modes_ = 0;
};

/// Heat semigroup e^{t Lap}: multiplies mode k by e^{-t k^2}.
inline Field heat_propagate(const Field& f, double t) {
    if (t < 0.0)
        throw DomainError("heat_propagate: negative time");
    auto spec = f.spectrum();
    for (std::size_t k = 0; k < spec.size(); ++k)
        spec[k] *= std::exp(-t * static_cast<double>(k) * static_cast<double>(k));
    return Field::from_spectrum(f.grid(), std::move(spec));
}

/// Spectral derivative of given order.  The Nyquist mode is dropped for odd
/// orders (its sine partner is invisible on the grid).  Coefficients at the
/// transform noise floor are snapped to zero first: multiplying by (ik)^p
/// would otherwise amplify pure roundoff into spurious high-mode content.
inline Field derivative(const Field& f, int order = 1) {
    auto spec = f.spectrum();
    double mx = 0.0;
    for (const auto& c : spec) mx = std::max(mx, std::abs(c));
    const std::size_t ny = spec.size() - 1;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        if (std::abs(spec[k]) <= 1e-15 * mx) {
            spec[k] = 0.0;
            continue;
        }
        std::complex<double> ik(0.0, static_cast<double>(k));
        std::complex<double> m = 1.0;
        for (int p = 0; p < order; ++p) m *= ik;
        spec[k] *= m;
    }
    if (order % 2 == 1)
        spec[ny] = 0.0;
    return Field::from_spectrum(f.grid(), std::move(spec));
}

/// Periodic convolution h(x) = int_T f(x-y) g(y) dy, exact for band-limited
/// inputs: h_k = 2 pi f_k g_k.
inline Field convolve(const Field& f, const Field& g) {
    f.check_same_grid(g);
    auto spec = f.spectrum();
    const auto& gs = g.spectrum();
    for (std::size_t k = 0; k < spec.size(); ++k)
        spec[k] *= two_pi * gs[k];
    return Field::from_spectrum(f.grid(), std::move(spec));
}

/// Pointwise product with 2x zero-padding (stronger than the 3/2 rule), so
/// the result is the exact L^2 projection of f*g onto the grid's modes.
inline Field dealiased_product(const Field& f, const Field& g) {
    f.check_same_grid(g);
    const std::size_t n = f.size();
    const std::size_t m = 2 * n;
    auto pad = [&](const Field& a) {
        std::vector<std::complex<double>> big(m / 2 + 1, 0.0);
        const auto& s = a.spectrum();
        for (std::size_t k = 0; k < n / 2; ++k) big[k] = s[k];
        big[n / 2] = 0.5 * s[n / 2];
        std::vector<double> v;
        detail::FftEngine::instance().inverse(big, m, v);
        return v;
    };
    std::vector<double> fa = pad(f), ga = pad(g);
    for (std::size_t j = 0; j < m; ++j) fa[j] *= ga[j];
    std::vector<std::complex<double>> big;
    detail::FftEngine::instance().forward(fa, big);
    std::vector<std::complex<double>> spec(n / 2 + 1);
    for (std::size_t k = 0; k < n / 2; ++k) spec[k] = big[k];
    spec[n / 2] = 0.0;
    return Field::from_spectrum(f.grid(), std::move(spec));
}

/// Trapezoid quadrature of f over the torus (exact for resolved modes).
inline double integral(const Field& f) { return two_pi * f.spectrum()[0].real(); }

/// Duality pairing <f, rho> = int f rho dx by trapezoid quadrature on the
/// shared uniform grid (spectrally accurate).
inline double pairing(const Field& f, const Field& rho) {
    f.check_same_grid(rho);
    double acc = 0.0;
    const auto& fv = f.values();
    const auto& rv = rho.values();
    for (std::size_t j = 0; j < fv.size(); ++j)
        acc += fv[j] * rv[j];
    return acc * f.grid().spacing();
}

/// Spectral-side L^2 energy, cf. Parseval.
inline double l2_norm_sq(const Field& f) {
    const auto& s = f.spectrum();
    double acc = s[0].real() * s[0].real();
    for (std::size_t k = 1; k + 1 < s.size(); ++k)
        acc += 2.0 * std::norm(s[k]);
    acc += s.back().real() * s.back().real();
    return two_pi * acc;
}

inline double l2_norm(const Field& f) { return std::sqrt(l2_norm_sq(f)); }

/// Fraction of spectral energy carried by the top decile of modes; used as a
/// resolution (Nyquist) diagnostic.
inline double nyquist_energy_fraction(const Field& f) {
    const auto& s = f.spectrum();
    double total = 0.0, top = 0.0;
    const std::size_t cut = s.size() - std::max<std::size_t>(1, s.size() / 10);
    for (std::size_t k = 1; k < s.size(); ++k) {
        const double e = std::norm(s[k]);
        total += e;
        if (k >= cut)
            top += e;
    }
    return total > 0.0 ? top / total : 0.0;
}

/// Sobolev H^k norm (sum of L^2 norms of spectral derivatives up to k).
inline double sobolev_norm(const Field& f, int k) {
    if (k < 0 || k > 4)
        throw DomainError("sobolev_norm: order must be in [0, 4]");
    const auto& s = f.spectrum();
    const std::size_t ny = s.size() - 1;
    double acc = 0.0;
    for (std::size_t m = 0; m <= ny; ++m) {
        const double w = (m == 0 || m == ny) ? 1.0 : 2.0;
        const double mm = static_cast<double>(m) * static_cast<double>(m);
        double deriv_factor = 1.0, sum_orders = 0.0;
        for (int i = 0; i <= k; ++i) {
            sum_orders += deriv_factor;
            deriv_factor *= mm;
        }
        acc += w * std::norm(s[m]) * sum_orders;
    }
    return std::sqrt(two_pi * acc);
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// CSV serialization: header "x,value", one row per node.
inline void write_field_csv(const Field& f, std::ostream& os) {
    os << "x,value\n";
    for (std::size_t j = 0; j < f.size(); ++j)
        os << format_double(f.grid().node(j)) << ','
           << format_double(f.values()[j]) << '\n';
}

inline Field read_field_csv(std::istream& is) {
    std::string line;
    std::getline(is, line);  // header
    std::vector<double> v;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DomainError("field CSV: malformed row");
        v.push_back(std::stod(line.substr(comma + 1)));
    }
    const std::size_t n = v.size();
    return Field(TorusGrid(n), std::move(v));
}

}  // namespace wips
