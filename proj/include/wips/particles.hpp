#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wips/common.hpp"
#include "wips/cutoff.hpp"
#include "wips/field.hpp"
#include "wips/mollifier.hpp"
#include "wips/noise.hpp"
#include "wips/path.hpp"
#include "wips/rng.hpp"

namespace wips {

/// Environmental potential V, inter-particle potential F, forcing profile q.
/// First derivatives are cached; higher ones come from derivative().
struct Potentials {
    Field V, F, q;
    Field Vp, Fp;

    Potentials(Field V_, Field F_, Field q_)
        : V(std::move(V_)),
          F(std::move(F_)),
          q(std::move(q_)),
          Vp(derivative(V)),
          Fp(derivative(F)) {
        V.check_same_grid(F);
        V.check_same_grid(q);
    }

    const TorusGrid& grid() const { return V.grid(); }
};

struct WeightMarginal {
    enum class Kind { delta, normal };
    Kind kind = Kind::delta;
    double mean = 1.0;
    double sd = 0.0;

    static WeightMarginal delta(double c) { return {Kind::delta, c, 0.0}; }
    static WeightMarginal normal(double mean, double sd) {
        return {Kind::normal, mean, sd};
    }
};

/// Product-form initial law mu_0 = zeta_0(x) * gamma(a) with strictly
/// positive position marginal.
class InitialLaw {
public:
    InitialLaw(Field zeta0, WeightMarginal weights)
        : zeta0_(std::move(zeta0)), weights_(weights) {
        eta_ = zeta0_.min();
        if (!(eta_ > 0.0))
            throw DomainError("InitialLaw: zeta0 must be strictly positive");
        const double mass = integral(zeta0_);
        if (std::fabs(mass - 1.0) > 1e-8)
            throw DomainError("InitialLaw: zeta0 must integrate to 1");
        build_cdf();
    }

    const Field& zeta0() const { return zeta0_; }
    double eta() const { return eta_; }
    double mean_weight() const { return weights_.mean; }
    const WeightMarginal& weights() const { return weights_; }

    /// Weighted marginal rho_0(x) = int a mu_0(x, a) da = E[A] zeta_0(x).
    Field rho0() const { return weights_.mean * zeta0_; }

    /// Draw pair i from its substream (two counter slots per particle).
    std::pair<double, double> draw(const Substream& s, std::uint64_t i) const {
        const double u = s.uniform(2 * i);
        const double x = invert_cdf(u);
        double a = weights_.mean;
        if (weights_.kind == WeightMarginal::Kind::normal)
            a += weights_.sd * s.normal(2 * i + 1);
        return {x, a};
    }

private:
    void build_cdf() {
        const std::size_t n = 4096;
        cdf_.resize(n + 1);
        xs_.resize(n + 1);
        double acc = 0.0;
        double prev = zeta0_.value_at(0.0);
        xs_[0] = 0.0;
        cdf_[0] = 0.0;
        const double h = two_pi / static_cast<double>(n);
        for (std::size_t j = 1; j <= n; ++j) {
            const double x = h * static_cast<double>(j);
            const double cur = zeta0_.value_at(x >= two_pi ? 0.0 : x);
            acc += 0.5 * (prev + cur) * h;
            xs_[j] = x;
            cdf_[j] = acc;
            prev = cur;
        }
        for (auto& c : cdf_)
            c /= acc;  // exact normalization of the table
    }

    double invert_cdf(double u) const {
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        std::size_t j = static_cast<std::size_t>(it - cdf_.begin());
        if (j == 0)
            return 0.0;
        if (j >= cdf_.size())
            j = cdf_.size() - 1;
        const double c0 = cdf_[j - 1], c1 = cdf_[j];
        const double w = (u - c0) / (c1 - c0);
        return wrap_angle(xs_[j - 1] + w * (xs_[j] - xs_[j - 1]));
    }

    Field zeta0_;
    WeightMarginal weights_;
    double eta_ = 0.0;
    std::vector<double> cdf_, xs_;
};

/// N positions on the torus with N real weights plus the level parameters
/// (eps, M, kappa, m) the trajectory was generated with.
struct ParticleEnsemble {
    std::vector<double> x;
    std::vector<double> a;
    double time = 0.0;
    double eps = 0.2;
    double M = 10.0;
    int kappa = 1;
    int m = 0;

    std::size_t size() const { return x.size(); }
};

inline ParticleEnsemble init_ensemble(const InitialLaw& law, std::size_t N,
                                      const Substream& s) {
    if (N < 1)
        throw DomainError("init_ensemble: N >= 1 required");
    ParticleEnsemble e;
    e.x.resize(N);
    e.a.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        auto [xi, ai] = law.draw(s, i);
        e.x[i] = xi;
        e.a[i] = ai;
    }
    return e;
}

/// Which weight the cutoff is applied to inside the interaction sum.  The
/// default follows Gamma_M at the joint empirical measure (cutoff on the
/// j-th weight); the literal variant reproduces the i-indexed printing of
/// the discretized system for comparison.
enum class CutoffVariant { weight_j, weight_i_literal };

/// Drift of particle i: -V'(X_i) - (1/N) sum_j chi_M(A_j) F'(X_i - X_j).
inline double interaction_drift(std::size_t i, const ParticleEnsemble& e,
                                const Potentials& pot,
                                CutoffVariant variant = CutoffVariant::weight_j) {
    if (e.size() == 0)
        throw DomainError("interaction_drift: empty ensemble");
    const CutoffParam M(e.M);
    ExactSum sum;
    for (std::size_t j = 0; j < e.size(); ++j) {
        const double w = variant == CutoffVariant::weight_j
                             ? cutoff(M, e.a[j])
                             : cutoff(M, e.a[i]);
        sum.add(w * pot.Fp.value_at(e.x[i] - e.x[j]));
    }
    return -pot.Vp.value_at(e.x[i]) -
           sum.value() / static_cast<double>(e.size());
}

/// Mollified empirical density (Phi_eps * zeta^N)(x) = (1/N) sum_j
/// Phi_eps(x - X_j); bounded below by mollifier_floor.
inline double mollified_density(const ParticleEnsemble& e, double x) {
    if (e.size() == 0)
        throw DomainError("mollified_density: empty ensemble");
    const MollifierParam p(e.eps);
    ExactSum sum;
    for (std::size_t j = 0; j < e.size(); ++j)
        sum.add(mollifier_eval(p, x - e.x[j]));
    return sum.value() / static_cast<double>(e.size());
}

/// Per-mode weight-drift coefficients c_z = lambda_z e_z(X_i) / denom for
/// |z| <= spec.max_mode(), returned over modes -m..m.
inline std::vector<double> weight_drift_coeffs(std::size_t i,
                                               const ParticleEnsemble& e,
                                               const NoiseSpec& spec) {
    const double denom = mollified_density(e, e.x[i]);
    const int m = spec.max_mode();
    std::vector<double> c(2 * static_cast<std::size_t>(m) + 1);
    for (int z = -m; z <= m; ++z)
        c[static_cast<std::size_t>(z + m)] =
            spec.lambda(z) * basis_eval(z, e.x[i]) / denom;
    return c;
}

/// Single-path weight-drift coefficient q(X_i) / denom.
inline double weight_drift_coeff_single(std::size_t i,
                                        const ParticleEnsemble& e,
                                        const Potentials& pot) {
    return pot.q.value_at(e.x[i]) / mollified_density(e, e.x[i]);
}

/// Gamma_M(x, mu) = int chi_M(a) F'(x - y) mu(dy da) at an equal-weight
/// discrete measure given as (position, weight) atoms.
inline double gamma_m_discrete(double x,
                               std::span<const std::pair<double, double>> atoms,
                               double M, const Potentials& pot) {
    const CutoffParam p(M);
    ExactSum sum;
    for (const auto& [y, a] : atoms)
        sum.add(cutoff(p, a) * pot.Fp.value_at(x - y));
    return sum.value() / static_cast<double>(atoms.size());
}

/// Xi_eps(x, mu) = q(x) / int Phi_eps(x - y) mu(dy da).
inline double xi_eps_discrete(double x,
                              std::span<const std::pair<double, double>> atoms,
                              double eps, const Potentials& pot) {
    const MollifierParam p(eps);
    ExactSum sum;
    for (const auto& [y, a] : atoms)
        sum.add(mollifier_eval(p, x - y));
    return pot.q.value_at(x) * static_cast<double>(atoms.size()) / sum.value();
}

/// Constant K such that |d^n Gamma_M(x,mu) - d^n Gamma_M(y,nu)|^2 <=
/// K (|x-y|^2 + W_2^2).  The Kantorovich part needs the full Lipschitz
/// constant of (y,a) -> chi_M(a) F^{(n+1)}(x-y) on T x R, which couples
/// |F^{(n+1)}|_inf with M |F^{(n+2)}|_inf; squaring the triangle bound
/// contributes the factor 2.
inline double gamma_lipschitz_sq_constant(const Potentials& pot, int n_deriv,
                                          double M) {
    const double f1 = derivative(pot.F, n_deriv + 1).max_abs();
    const double f2 = derivative(pot.F, n_deriv + 2).max_abs();
    return 2.0 * (f1 * f1 + M * M * f2 * f2);
}

/// Same for Xi_eps with (|q|_inf D_eps + |q'|_inf M_eps) / m_eps^2.
inline double xi_lipschitz_sq_constant(const Potentials& pot, double eps) {
    const MollifierParam p(eps);
    const double lin = (pot.q.max_abs() * mollifier_deriv_bound(p) +
                        derivative(pot.q).max_abs() * mollifier_sup(p)) /
                       (mollifier_floor(p) * mollifier_floor(p));
    return 2.0 * lin * lin;
}

/// Common-noise forcing acting on the weights.
struct WeightForcing {
    enum class Kind { none, single_path, mode_family };
    Kind kind = Kind::none;
    const NoiseSpec* spec = nullptr;  // mode_family only

    static WeightForcing none() { return {}; }
    static WeightForcing single_path() {
        WeightForcing f;
        f.kind = Kind::single_path;
        return f;
    }
    static WeightForcing mode_family(const NoiseSpec& s) {
        WeightForcing f;
        f.kind = Kind::mode_family;
        f.spec = &s;
        return f;
    }
};

enum class InteractionMode { automatic, direct, spectral };

namespace detail {

/// Trimmed half-spectrum of a field: modes 0..K with K the last coefficient
/// above 1e-15 of the max (the Nyquist mode of derivatives is zero anyway).
inline std::vector<std::complex<double>> trimmed_spectrum(const Field& f) {
    const auto& s = f.spectrum();
    double mx = 0.0;
    for (const auto& c : s) mx = std::max(mx, std::abs(c));
    std::size_t K = 0;
    for (std::size_t k = 0; k + 1 < s.size(); ++k)
        if (std::abs(s[k]) > 1e-15 * mx)
            K = k;
    return std::vector<std::complex<double>>(s.begin(),
                                             s.begin() + static_cast<long>(K) + 1);
}

}  // namespace detail

/// One engine realizes the interacting system and all mean-field ensemble
/// levels: the position drift is either Gamma_M against the ensemble itself
/// or a frozen external field, and the weight denominator is either the
/// mollified empirical density or an external marginal density.
class ParticleSystem {
public:
    enum class DriftKind { interaction, external_field };
    enum class DenominatorKind { mollified_empirical, external_field };

    ParticleSystem(ParticleEnsemble initial, const Potentials& pot,
                   WeightForcing forcing,
                   DriftKind drift = DriftKind::interaction,
                   DenominatorKind denom = DenominatorKind::mollified_empirical,
                   CutoffVariant variant = CutoffVariant::weight_j,
                   InteractionMode mode = InteractionMode::automatic)
        : state_(std::move(initial)),
          pot_(&pot),
          forcing_(forcing),
          drift_kind_(drift),
          denom_kind_(denom),
          variant_(variant),
          mode_(mode),
          fp_spec_(detail::trimmed_spectrum(pot.Fp)) {
        if (denom_kind_ == DenominatorKind::mollified_empirical) {
            const MollifierParam mp(state_.eps);
            auto hat = mollifier_fourier(mp, 4096);
            std::size_t K = hat.size() - 1;
            while (K > 0 && hat[K] < 1e-16)
                --K;
            hat.resize(K + 1);
            phi_hat_ = std::move(hat);
            floor_ = mollifier_floor(mp);
        }
    }

    const ParticleEnsemble& state() const { return state_; }
    ParticleEnsemble take_state() { return std::move(state_); }
    double min_denominator_seen() const { return min_denom_; }

    void set_external_drift(const Field* conv) { external_drift_ = conv; }
    void set_external_density(const Field* zeta) { external_density_ = zeta; }

    /// Advance one explicit Euler-Maruyama step.  dY carries one increment
    /// per forcing mode (single value for single_path); dBeta carries one
    /// variance-dt Gaussian per particle, scaled by sqrt(2) internally.
    void step(double dt, std::span<const double> dY,
              std::span<const double> dBeta) {
        const std::size_t N = state_.size();
        if (!(dt > 0.0))
            throw DomainError("ParticleSystem::step: dt must be positive");
        if (dBeta.size() != N)
            throw DomainError("ParticleSystem::step: dBeta size mismatch");
        if (forcing_.kind == WeightForcing::Kind::single_path && dY.size() != 1)
            throw DomainError("ParticleSystem::step: expected one dY increment");
        if (forcing_.kind == WeightForcing::Kind::mode_family &&
            dY.size() != 2 * static_cast<std::size_t>(forcing_.spec->max_mode()) + 1)
            throw DomainError("ParticleSystem::step: dY mode count mismatch");

        compute_drifts_and_denoms();

        const double sqrt2 = std::sqrt(2.0);
        for (std::size_t i = 0; i < N; ++i) {
            double dA = 0.0;
            switch (forcing_.kind) {
                case WeightForcing::Kind::none:
                    break;
                case WeightForcing::Kind::single_path:
                    dA = pot_->q.value_at(state_.x[i]) / denom_[i] * dY[0];
                    break;
                case WeightForcing::Kind::mode_family: {
                    const int m = forcing_.spec->max_mode();
                    double acc = 0.0;
                    for (int z = -m; z <= m; ++z) {
                        const double lz = forcing_.spec->lambda(z);
                        if (lz == 0.0)
                            continue;
                        acc += lz * basis_eval(z, state_.x[i]) *
                               dY[static_cast<std::size_t>(z + m)];
                    }
                    dA = acc / denom_[i];
                    break;
                }
            }
            state_.x[i] =
                wrap_angle(state_.x[i] + drift_[i] * dt + sqrt2 * dBeta[i]);
            state_.a[i] += dA;
        }
        state_.time += dt;
        sums_valid_ = false;
    }

    /// Pre-step drift and weight-denominator evaluation at the current state
    /// (the same quantities step() uses).
    std::pair<std::vector<double>, std::vector<double>> evaluate() {
        compute_drifts_and_denoms();
        return {drift_, denom_};
    }

    /// Gamma_M (or plain Gamma for M = +inf semantics via huge M) against the
    /// current ensemble, evaluated on a grid: (1/N) sum_j chi_M(A_j) F'(x-X_j).
    Field gamma_field(const TorusGrid& g) const {
        accumulate_mode_sums();
        const std::size_t K = fp_spec_.size() - 1;
        std::vector<std::complex<double>> spec(g.size() / 2 + 1, 0.0);
        for (std::size_t k = 0; k <= K && k < spec.size() - 1; ++k)
            spec[k] = fp_spec_[k] * Sw_[k];
        return Field::from_spectrum(g, std::move(spec));
    }

    /// Mollified empirical density on a grid.
    Field density_field(const TorusGrid& g) const {
        accumulate_mode_sums();
        std::vector<std::complex<double>> spec(g.size() / 2 + 1, 0.0);
        for (std::size_t k = 0; k < phi_hat_.size() && k < spec.size() - 1; ++k)
            spec[k] = phi_hat_[k] * Su_[k];
        return Field::from_spectrum(g, std::move(spec));
    }

private:
    bool use_spectral() const {
        if (mode_ == InteractionMode::direct)
            return false;
        if (mode_ == InteractionMode::spectral)
            return true;
        return state_.size() > 256;
    }

    /// Weighted and unweighted empirical mode sums
    ///   Sw_k = (1/N) sum_j chi_M(A_j) e^{-ik X_j},  Su_k = (1/N) sum_j e^{-ik X_j},
    /// accumulated with ExactSum so the result is permutation-invariant.
    void accumulate_mode_sums() const {
        if (sums_valid_)
            return;
        const std::size_t N = state_.size();
        const std::size_t Kf = fp_spec_.size() - 1;
        const std::size_t Kp = phi_hat_.empty() ? 0 : phi_hat_.size() - 1;
        const std::size_t K = std::max(Kf, Kp);
        const CutoffParam M(state_.M);
        std::vector<ExactSum> re_w(K + 1), im_w(K + 1), re_u(K + 1), im_u(K + 1);
        for (std::size_t j = 0; j < N; ++j) {
            const double w = cutoff(M, state_.a[j]);
            const double c1 = std::cos(state_.x[j]);
            const double s1 = std::sin(state_.x[j]);
            double ck = 1.0, sk = 0.0;
            for (std::size_t k = 0; k <= K; ++k) {
                if (k > 0) {
                    const double cn = ck * c1 - sk * s1;
                    const double sn = sk * c1 + ck * s1;
                    ck = cn;
                    sk = sn;
                }
                // e^{-ik x} = (cos kx, -sin kx)
                if (k <= Kf) {
                    re_w[k].add(w * ck);
                    im_w[k].add(-w * sk);
                }
                re_u[k].add(ck);
                im_u[k].add(-sk);
            }
        }
        Sw_.assign(Kf + 1, 0.0);
        Su_.assign(K + 1, 0.0);
        const double invN = 1.0 / static_cast<double>(N);
        for (std::size_t k = 0; k <= K; ++k) {
            if (k <= Kf)
                Sw_[k] = std::complex<double>(re_w[k].value(), im_w[k].value()) * invN;
            Su_[k] = std::complex<double>(re_u[k].value(), im_u[k].value()) * invN;
        }
        sums_valid_ = true;
    }

    void compute_drifts_and_denoms() {
        const std::size_t N = state_.size();
        drift_.resize(N);
        denom_.assign(N, 1.0);

        const bool need_denom =
            forcing_.kind != WeightForcing::Kind::none;
        const bool interaction = drift_kind_ == DriftKind::interaction;

        if (interaction || (need_denom && denom_kind_ == DenominatorKind::mollified_empirical)) {
            if (use_spectral())
                spectral_pass(need_denom);
            else
                direct_pass(need_denom);
        }
        // external pieces override / fill in
        for (std::size_t i = 0; i < N; ++i) {
            if (!interaction) {
                const double conv =
                    external_drift_ ? external_drift_->value_at(state_.x[i]) : 0.0;
                drift_[i] = -pot_->Vp.value_at(state_.x[i]) - conv;
            }
            if (need_denom && denom_kind_ == DenominatorKind::external_field) {
                const double z = external_density_->value_at(state_.x[i]);
                if (!(z > 0.0))
                    throw SolverError(
                        "particle weight denominator: external density not "
                        "strictly positive");
                denom_[i] = z;
            }
        }
        if (need_denom && denom_kind_ == DenominatorKind::mollified_empirical) {
            for (std::size_t i = 0; i < N; ++i) {
                if (denom_[i] + 1e-12 < floor_)
                    throw SolverError(
                        "mollified density fell below the m_eps floor");
                min_denom_ = std::min(min_denom_, denom_[i]);
            }
        }
    }

    void direct_pass(bool need_denom) {
        const std::size_t N = state_.size();
        const CutoffParam M(state_.M);
        const MollifierParam mp(state_.eps);
        const bool interaction = drift_kind_ == DriftKind::interaction;
        for (std::size_t i = 0; i < N; ++i) {
            ExactSum gsum, dsum;
            for (std::size_t j = 0; j < N; ++j) {
                if (interaction) {
                    const double w = variant_ == CutoffVariant::weight_j
                                         ? cutoff(M, state_.a[j])
                                         : cutoff(M, state_.a[i]);
                    gsum.add(w * pot_->Fp.value_at(state_.x[i] - state_.x[j]));
                }
                if (need_denom && denom_kind_ == DenominatorKind::mollified_empirical)
                    dsum.add(mollifier_eval(mp, state_.x[i] - state_.x[j]));
            }
            const double invN = 1.0 / static_cast<double>(N);
            if (interaction)
                drift_[i] = -pot_->Vp.value_at(state_.x[i]) - gsum.value() * invN;
            if (need_denom && denom_kind_ == DenominatorKind::mollified_empirical)
                denom_[i] = dsum.value() * invN;
        }
    }

    void spectral_pass(bool need_denom) {
        const std::size_t N = state_.size();
        accumulate_mode_sums();
        const std::size_t Kf = fp_spec_.size() - 1;
        const std::size_t Kp = phi_hat_.empty() ? 0 : phi_hat_.size() - 1;
        const std::size_t K = std::max(Kf, Kp);
        const bool interaction = drift_kind_ == DriftKind::interaction;
        const bool mollified =
            need_denom && denom_kind_ == DenominatorKind::mollified_empirical;

        // per-mode products: c_k Sw_k drives the default variant, c_k Su_k the
        // literal one (which applies chi_M(A_i) outside the sum)
        const bool literal = variant_ == CutoffVariant::weight_i_literal;
        std::vector<std::complex<double>> gs(Kf + 1), de(Kp + 1);
        for (std::size_t k = 0; k <= Kf; ++k)
            gs[k] = fp_spec_[k] * (literal ? Su_[k] : Sw_[k]);
        if (mollified)
            for (std::size_t k = 0; k <= Kp; ++k) de[k] = phi_hat_[k] * Su_[k];

        const CutoffParam M(state_.M);
        for (std::size_t i = 0; i < N; ++i) {
            const double c1 = std::cos(state_.x[i]);
            const double s1 = std::sin(state_.x[i]);
            double ck = 1.0, sk = 0.0;
            double gamma = interaction ? gs[0].real() : 0.0;
            double dens = mollified ? de[0].real() : 0.0;
            for (std::size_t k = 1; k <= K; ++k) {
                const double cn = ck * c1 - sk * s1;
                const double sn = sk * c1 + ck * s1;
                ck = cn;
                sk = sn;
                if (interaction && k <= Kf)
                    gamma += 2.0 * (gs[k].real() * ck - gs[k].imag() * sk);
                if (mollified && k <= Kp)
                    dens += 2.0 * (de[k].real() * ck - de[k].imag() * sk);
            }
            if (interaction) {
                if (literal)
                    gamma *= cutoff(M, state_.a[i]);
                drift_[i] = -pot_->Vp.value_at(state_.x[i]) - gamma;
            }
            if (mollified)
                denom_[i] = dens;
        }
    }

    ParticleEnsemble state_;
    const Potentials* pot_;
    WeightForcing forcing_;
    DriftKind drift_kind_;
    DenominatorKind denom_kind_;
    CutoffVariant variant_;
    InteractionMode mode_;
    const Field* external_drift_ = nullptr;
    const Field* external_density_ = nullptr;

    std::vector<std::complex<double>> fp_spec_;
    std::vector<double> phi_hat_;
    double floor_ = 0.0;
    double min_denom_ = std::numeric_limits<double>::infinity();

    std::vector<double> drift_, denom_;
    mutable std::vector<std::complex<double>> Sw_, Su_;
    mutable bool sums_valid_ = false;
};

/// Explicit Euler-Maruyama step of the weighted interacting particle system
/// (per-op form; drivers use ParticleSystem directly).
inline ParticleEnsemble em_step(ParticleEnsemble e, const Potentials& pot,
                                const WeightForcing& forcing, double dt,
                                std::span<const double> dY,
                                std::span<const double> dBeta,
                                CutoffVariant variant = CutoffVariant::weight_j) {
    ParticleSystem sys(std::move(e), pot, forcing,
                       ParticleSystem::DriftKind::interaction,
                       ParticleSystem::DenominatorKind::mollified_empirical,
                       variant);
    sys.step(dt, dY, dBeta);
    return sys.take_state();
}

/// Named observable f used in pairings; evaluated pointwise.
struct TestFunction {
    std::string name;
    std::function<double(double)> fn;
};

inline TestFunction make_test_function(const std::string& name) {
    if (name == "one" || name == "1")
        return {name, [](double) { return 1.0; }};
    if (name == "cos")
        return {name, [](double x) { return std::cos(x); }};
    if (name == "sin")
        return {name, [](double x) { return std::sin(x); }};
    if (!name.empty() && name[0] == 'e') {
        const int z = std::stoi(name.substr(1));
        return {name, [z](double x) { return basis_eval(z, x); }};
    }
    throw DomainError("unknown test function: " + name);
}

/// <f, rho^N> = (1/N) sum_i A_i f(X_i) (permutation-invariant reduction).
inline double pairing(const TestFunction& f, const ParticleEnsemble& e) {
    ExactSum sum;
    for (std::size_t i = 0; i < e.size(); ++i)
        sum.add(e.a[i] * f.fn(e.x[i]));
    return sum.value() / static_cast<double>(e.size());
}

/// <f, zeta^N> = (1/N) sum_i f(X_i).
inline double unweighted_pairing(const TestFunction& f,
                                 const ParticleEnsemble& e) {
    ExactSum sum;
    for (std::size_t i = 0; i < e.size(); ++i)
        sum.add(f.fn(e.x[i]));
    return sum.value() / static_cast<double>(e.size());
}

struct ParticleRunConfig {
    double T = 1.0;
    double dt = 1e-3;
    CutoffVariant cutoff_variant = CutoffVariant::weight_j;
    InteractionMode interaction = InteractionMode::automatic;
    std::size_t observable_stride = 1;
};

struct ParticleRunResult {
    std::vector<double> times;
    std::vector<std::string> fn_names;
    std::vector<std::vector<double>> observables;  // [fn][time index]
    ParticleEnsemble final_state;
    double min_denominator = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, ParticleEnsemble>> snapshots;
};

/// Evolve the weighted interacting particle system over [0, T] recording the
/// weighted pairings of the given test functions.  The common-noise paths
/// are fixed inputs (one per mode); idiosyncratic increments come from the
/// per-particle substreams.
inline ParticleRunResult run_particle_system(
    ParticleEnsemble initial, const Potentials& pot,
    const WeightForcing& forcing, const std::vector<const SampledPath*>& paths,
    const ParticleRunConfig& cfg,
    const std::function<Substream(std::size_t)>& beta_stream,
    const std::vector<TestFunction>& fns,
    const std::vector<double>& snapshot_times = {}) {
    const std::size_t N = initial.size();
    const std::size_t steps =
        static_cast<std::size_t>(std::llround(cfg.T / cfg.dt));
    ParticleSystem sys(std::move(initial), pot, forcing,
                       ParticleSystem::DriftKind::interaction,
                       ParticleSystem::DenominatorKind::mollified_empirical,
                       cfg.cutoff_variant, cfg.interaction);

    ParticleRunResult out;
    out.fn_names.reserve(fns.size());
    for (const auto& f : fns)
        out.fn_names.push_back(f.name);
    out.observables.assign(fns.size(), {});

    std::vector<Substream> streams(N);
    for (std::size_t i = 0; i < N; ++i)
        streams[i] = beta_stream(i);

    auto record = [&](double t) {
        out.times.push_back(t);
        for (std::size_t f = 0; f < fns.size(); ++f)
            out.observables[f].push_back(pairing(fns[f], sys.state()));
    };
    std::size_t next_snap = 0;
    auto snapshot_if_due = [&](double t) {
        while (next_snap < snapshot_times.size() &&
               snapshot_times[next_snap] <= t + 1e-12) {
            out.snapshots.emplace_back(t, sys.state());
            ++next_snap;
        }
    };

    record(0.0);
    snapshot_if_due(0.0);
    std::vector<double> dY, dBeta(N);
    const double sd = std::sqrt(cfg.dt);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = cfg.dt * static_cast<double>(k);
        const double t1 = (k + 1 == steps) ? cfg.T : t0 + cfg.dt;
        dY.clear();
        for (const SampledPath* p : paths)
            dY.push_back(p->increment(t0, t1));
        for (std::size_t i = 0; i < N; ++i)
            dBeta[i] = sd * streams[i].normal(k);
        sys.step(t1 - t0, dY, dBeta);
        if ((k + 1) % cfg.observable_stride == 0 || k + 1 == steps)
            record(t1);
        snapshot_if_due(t1);
    }
    out.min_denominator = sys.min_denominator_seen();
    out.final_state = sys.take_state();
    return out;
}

/// The trajectory t -> <f, rho_t^N> for one of the recorded test functions.
inline SampledPath weighted_pairing_trajectory(const ParticleRunResult& run,
                                               const std::string& fn_name) {
    for (std::size_t f = 0; f < run.fn_names.size(); ++f)
        if (run.fn_names[f] == fn_name)
            return SampledPath(run.times, run.observables[f]);
    throw DomainError("weighted_pairing_trajectory: unknown test function " +
                      fn_name);
}

/// Mean-field pair evolution at the kappa level (sistemaK-rho): positions
/// driven by the PDE convolution field, weights by q / zeta.
inline ParticleEnsemble mean_field_ensemble_step(
    ParticleEnsemble e, const Potentials& pot, const Field& rho,
    const Field& zeta, double dt, double dY, std::span<const double> dBeta) {
    if (!(zeta.min() > 0.0))
        throw SolverError(
            "mean_field_ensemble_step: zeta lower-bound violation (min = " +
            format_double(zeta.min()) + ")");
    const Field conv = convolve(pot.Fp, rho);
    ParticleSystem sys(std::move(e), pot, WeightForcing::single_path(),
                       ParticleSystem::DriftKind::external_field,
                       ParticleSystem::DenominatorKind::external_field);
    sys.set_external_drift(&conv);
    sys.set_external_density(&zeta);
    const double dYa[1] = {dY};
    sys.step(dt, dYa, dBeta);
    return sys.take_state();
}

}  // namespace wips
