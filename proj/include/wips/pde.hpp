#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "wips/common.hpp"
#include "wips/field.hpp"
#include "wips/mollifier.hpp"
#include "wips/particles.hpp"
#include "wips/path.hpp"

namespace wips {

/// Rate a(b) of the parabolic lower bound w_t >= (min w_0) e^{-t a(b)} for
/// d_t w = d_xx w + d_x[b w]: a(b) = sup|b|^2 / 2 + sup|b'|.
inline double lower_bound_rate_b3(const Field& drift) {
    return 0.5 * drift.max_abs() * drift.max_abs() +
           derivative(drift).max_abs();
}

/// A(M) = |V'|_inf^2 + M^2 |F'|_inf^2 + |V''|_inf + M |F''|_inf.
inline double lower_bound_rate_lemma54(const Potentials& pot, double M) {
    const double vp = pot.Vp.max_abs();
    const double fp = pot.Fp.max_abs();
    const double vpp = derivative(pot.V, 2).max_abs();
    const double fpp = derivative(pot.F, 2).max_abs();
    return vp * vp + M * M * fp * fp + vpp + M * fpp;
}

/// V(kappa, rho^kappa) with the L2 bound of the weighted marginal in place
/// of the cutoff level.
inline double lower_bound_rate_lemma64(const Potentials& pot,
                                       double sup_rho_l2) {
    const double vp = pot.Vp.max_abs();
    const double fp = pot.Fp.max_abs();
    const double vpp = derivative(pot.V, 2).max_abs();
    const double fpp = derivative(pot.F, 2).max_abs();
    return vp * vp + fp * fp * sup_rho_l2 * sup_rho_l2 + vpp + fpp * sup_rho_l2;
}

struct LowerBoundCertificate {
    double eta = 0.0;   // min of the initial datum
    double rate = 0.0;  // a(f) or A(M)
    double floor(double t) const { return eta * std::exp(-t * rate); }
};

namespace detail {

/// ETD-Euler core: the Laplacian is integrated exactly per mode, the
/// advective flux d_x[b rho] explicitly, products on a 2x-padded grid.
class SpectralStepper {
public:
    SpectralStepper(TorusGrid grid, double dt)
        : grid_(grid), dt_(dt), n_(grid.size()) {
        if (!(dt > 0.0))
            throw DomainError("SpectralStepper: dt must be positive");
        const std::size_t half = n_ / 2;
        decay_.resize(half + 1);
        phi_.resize(half + 1);
        prod_.resize(2 * n_);
        for (std::size_t k = 0; k <= half; ++k) {
            const double k2 = static_cast<double>(k) * static_cast<double>(k);
            const double w = k2 * dt;
            decay_[k] = std::exp(-w);
            phi_[k] = k == 0 ? dt : -std::expm1(-w) / k2;
        }
    }

    const TorusGrid& grid() const { return grid_; }
    double dt() const { return dt_; }

    /// Values of the current state on the 2x-padded grid from the last step
    /// (valid after step(); used for min/positivity checks).
    const std::vector<double>& padded_state_values() const { return rho_vals_; }

    /// Advance rho_hat one step with drift field b (given as half-spectrum)
    /// and a pre-assembled forcing: force_rate[k] = sum_f g_hat_f[k] dY_f/dt
    /// for k >= 1, force_dc = sum_f g_hat_f[0] dY_f.
    /// Returns max |b| over the padded grid (CFL diagnostic).
    double step(std::vector<std::complex<double>>& rho_hat,
                const std::vector<std::complex<double>>& b_hat,
                const std::vector<std::complex<double>>* force_rate,
                std::complex<double> force_dc) {
        const std::size_t half = n_ / 2;
        pad(rho_hat, rho_vals_);
        pad(b_hat, b_vals_);
        double bmax = 0.0;
        for (std::size_t j = 0; j < 2 * n_; ++j) {
            bmax = std::max(bmax, std::fabs(b_vals_[j]));
            prod_[j] = rho_vals_[j] * b_vals_[j];
        }
        detail::FftEngine::instance().forward(prod_, prod_hat_);
        // k = 0: flux has zero mean; only the forcing acts
        rho_hat[0] += force_dc;
        for (std::size_t k = 1; k < half; ++k) {
            const std::complex<double> flux =
                std::complex<double>(0.0, static_cast<double>(k)) * prod_hat_[k];
            std::complex<double> rhs = flux;
            if (force_rate)
                rhs += (*force_rate)[k];
            rho_hat[k] = decay_[k] * rho_hat[k] + phi_[k] * rhs;
        }
        rho_hat[half] *= decay_[half];
        return bmax;
    }

private:
    void pad(const std::vector<std::complex<double>>& spec,
             std::vector<double>& out) {
        const std::size_t half = n_ / 2;
        big_.assign(n_ + 1, 0.0);
        for (std::size_t k = 0; k < half; ++k)
            big_[k] = spec[k];
        big_[half] = 0.5 * spec[half];
        detail::FftEngine::instance().inverse(big_, 2 * n_, out);
    }

    TorusGrid grid_;
    double dt_;
    std::size_t n_;
    std::vector<double> decay_, phi_;
    std::vector<std::complex<double>> big_, prod_hat_;
    std::vector<double> rho_vals_, b_vals_, prod_;
};

inline std::vector<std::complex<double>> spectrum_of(const Field& f) {
    return f.spectrum();
}

}  // namespace detail

/// Forcing term g(x) dY with its own driving path.
struct ForcingTerm {
    Field profile;
    const SampledPath* path = nullptr;
};

/// Basis-mode forcing profile lambda_z e_z as a Field.
inline Field mode_profile(const TorusGrid& g, int z, double lambda) {
    return lambda * Field::basis(g, z);
}

/// One exponential-time-differencing step of the forced McKean-Vlasov
/// equation: drift V' + F' * rho, flux integrated explicitly, forcing
/// increments (profile, dY) per term.
inline Field step_mkv(
    const Field& rho, const Potentials& pot, double dt,
    std::span<const std::pair<const Field*, double>> forcing_increments) {
    const TorusGrid& g = rho.grid();
    detail::SpectralStepper stepper(g, dt);
    auto rho_hat = rho.spectrum();
    const std::size_t half = g.size() / 2;

    // b = V' + F' * rho
    std::vector<std::complex<double>> b_hat(half + 1);
    const auto& vp = pot.Vp.spectrum();
    const auto& fp = pot.Fp.spectrum();
    for (std::size_t k = 0; k <= half; ++k)
        b_hat[k] = vp[k] + two_pi * fp[k] * rho_hat[k];

    std::vector<std::complex<double>> force(half + 1, 0.0);
    std::complex<double> force_dc = 0.0;
    for (const auto& [profile, dY] : forcing_increments) {
        rho.check_same_grid(*profile);
        const auto& gh = profile->spectrum();
        for (std::size_t k = 1; k <= half; ++k)
            force[k] += gh[k] * (dY / dt);
        force_dc += gh[0] * dY;
    }
    const double bmax = stepper.step(rho_hat, b_hat, &force, force_dc);
    if (dt > g.spacing() / std::max(bmax, 1e-300))
        throw SolverError("step_mkv: CFL violation (dt too large for drift)");
    for (const auto& c : rho_hat)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw SolverError("step_mkv: non-finite state");
    return Field::from_spectrum(g, std::move(rho_hat));
}

struct PdeRunConfig {
    double T = 1.0;
    double dt = 2.5e-4;
    std::size_t store_stride = 1;  // keep every k-th step in the trajectory
    bool check_cfl = true;
};

struct PdeTrajectory {
    std::vector<double> times;
    std::vector<Field> fields;
    // diagnostics over the whole run
    double mass_residual_max = 0.0;
    double min_value = std::numeric_limits<double>::infinity();
    double floor_margin_min = std::numeric_limits<double>::infinity();
    double sup_l2 = 0.0;
    double grad_l2_integral = 0.0;
    double sup_h2 = 0.0;

    const Field& back() const { return fields.back(); }
};

/// sup over shared output times of the L2 distance between trajectories.
inline double sup_l2_gap(const PdeTrajectory& a, const PdeTrajectory& b) {
    if (a.times.size() != b.times.size())
        throw DomainError("sup_l2_gap: trajectories have different meshes");
    double sup = 0.0;
    for (std::size_t i = 0; i < a.times.size(); ++i)
        sup = std::max(sup, l2_norm(a.fields[i] - b.fields[i]));
    return sup;
}

/// Pairing trajectory <f, rho_t> over stored times.
inline SampledPath pairing_trajectory(const PdeTrajectory& traj,
                                      const Field& f) {
    std::vector<double> v(traj.times.size());
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        v[i] = pairing(f, traj.fields[i]);
    return SampledPath(traj.times, v);
}

/// Full trajectory CSV: t plus one column per grid node.
inline void write_pde_trajectory_csv(const PdeTrajectory& traj,
                                     std::ostream& os) {
    os << "t";
    for (std::size_t j = 0; j < traj.fields.front().size(); ++j)
        os << ",x" << j;
    os << '\n';
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        os << format_double(traj.times[i]);
        for (double v : traj.fields[i].values())
            os << ',' << format_double(v);
        os << '\n';
    }
}

/// Compact observables CSV: t, mass, min, l2norm, h1norm, pairing_f1..fK.
inline void write_pde_observables_csv(
    const PdeTrajectory& traj, const std::vector<Field>& fn_fields,
    const std::vector<std::string>& fn_names, std::ostream& os) {
    os << "t,mass,min,l2norm,h1norm";
    for (const auto& n : fn_names)
        os << ",pairing_" << n;
    os << '\n';
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const Field& f = traj.fields[i];
        os << format_double(traj.times[i]) << ',' << format_double(integral(f))
           << ',' << format_double(f.min()) << ',' << format_double(l2_norm(f))
           << ',' << format_double(sobolev_norm(f, 1));
        for (const auto& fn : fn_fields)
            os << ',' << format_double(pairing(fn, f));
        os << '\n';
    }
}

namespace detail {

struct MassLedger {
    double initial = 0.0;
    double forced = 0.0;  // accumulated <1, g_s> dY_s
    void start(const std::vector<std::complex<double>>& rho_hat) {
        initial = two_pi * rho_hat[0].real();
    }
    void add(std::complex<double> force_dc) {
        forced += two_pi * force_dc.real();
    }
    double residual(const std::vector<std::complex<double>>& rho_hat) const {
        return std::fabs(two_pi * rho_hat[0].real() - initial - forced);
    }
};

}  // namespace detail

struct MkvRun {
    Field rho0;
    const Potentials* pot = nullptr;
    std::vector<ForcingTerm> forcing;  // empty = unforced
    PdeRunConfig cfg;
};

/// Time-march the forced nonlinear McKean-Vlasov equation
/// d_t rho = d_xx rho + d_x[(V' + F' * rho) rho] + sum_f g_f dY_f.
inline PdeTrajectory solve_mkv(const MkvRun& run) {
    const TorusGrid& g = run.rho0.grid();
    const std::size_t half = g.size() / 2;
    const std::size_t steps =
        static_cast<std::size_t>(std::llround(run.cfg.T / run.cfg.dt));
    detail::SpectralStepper stepper(g, run.cfg.dt);

    auto rho_hat = run.rho0.spectrum();
    const auto& vp = run.pot->Vp.spectrum();
    const auto& fp = run.pot->Fp.spectrum();
    std::vector<std::complex<double>> b_hat(half + 1), force(half + 1);

    detail::MassLedger mass;
    mass.start(rho_hat);

    PdeTrajectory out;
    auto store = [&](double t, const std::vector<std::complex<double>>& sh) {
        out.times.push_back(t);
        out.fields.push_back(Field::from_spectrum(g, sh));
        const Field& f = out.fields.back();
        out.sup_l2 = std::max(out.sup_l2, l2_norm(f));
        out.sup_h2 = std::max(out.sup_h2, sobolev_norm(f, 2));
        out.min_value = std::min(out.min_value, f.min());
        out.mass_residual_max =
            std::max(out.mass_residual_max, mass.residual(sh));
    };
    store(0.0, rho_hat);

    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = run.cfg.dt * static_cast<double>(k);
        const double t1 = (k + 1 == steps) ? run.cfg.T : t0 + run.cfg.dt;
        const double h = t1 - t0;
        for (std::size_t m = 0; m <= half; ++m)
            b_hat[m] = vp[m] + two_pi * fp[m] * rho_hat[m];
        std::fill(force.begin(), force.end(), std::complex<double>(0.0));
        std::complex<double> force_dc = 0.0;
        for (const auto& term : run.forcing) {
            const double dY = term.path->increment(t0, t1);
            const auto& gh = term.profile.spectrum();
            for (std::size_t m = 1; m <= half; ++m)
                force[m] += gh[m] * (dY / h);
            force_dc += gh[0] * dY;
        }
        const double bmax = stepper.step(rho_hat, b_hat, &force, force_dc);
        mass.add(force_dc);
        if (run.cfg.check_cfl && h > g.spacing() / std::max(bmax, 1e-300))
            throw SolverError("solve_mkv: CFL violation at t = " +
                              format_double(t0));
        for (const auto& c : rho_hat)
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
                throw SolverError("solve_mkv: non-finite state at t = " +
                                  format_double(t1));
        // running H1 seminorm for the a-priori energy diagnostic
        double grad = 0.0;
        for (std::size_t m = 1; m <= half; ++m)
            grad += 2.0 * static_cast<double>(m * m) * std::norm(rho_hat[m]);
        out.grad_l2_integral += two_pi * grad * h;
        if ((k + 1) % run.cfg.store_stride == 0 || k + 1 == steps)
            store(t1, rho_hat);
    }
    return out;
}

/// Drift supplier for the linear Fokker-Planck solver: called once per step
/// with the pre-step time, must return the drift field b(t, .).
using DriftProvider = std::function<const Field&(std::size_t step, double t)>;

struct LinearFpRun {
    Field zeta0;
    DriftProvider drift;
    PdeRunConfig cfg;
    bool enforce_floor = true;  // assert the Theorem-B.3 lower bound
};

/// Linear advection-diffusion (Fokker-Planck) marginal solve:
/// d_t zeta = d_xx zeta + d_x[b zeta]; conserves mass exactly in mode 0 and
/// asserts the positivity floor (min zeta_0) e^{-t a(b)} with the running
/// rate a over [0, t].
inline PdeTrajectory solve_linear_fp(const LinearFpRun& run) {
    const TorusGrid& g = run.zeta0.grid();
    const std::size_t half = g.size() / 2;
    const std::size_t steps =
        static_cast<std::size_t>(std::llround(run.cfg.T / run.cfg.dt));
    detail::SpectralStepper stepper(g, run.cfg.dt);

    auto zeta_hat = run.zeta0.spectrum();
    const double mass0 = two_pi * zeta_hat[0].real();
    const double eta = run.zeta0.min();

    PdeTrajectory out;
    double rate_sup_b = 0.0, rate_sup_bp = 0.0;

    auto store = [&](double t, const std::vector<std::complex<double>>& sh) {
        out.times.push_back(t);
        out.fields.push_back(Field::from_spectrum(g, sh));
        const Field& f = out.fields.back();
        out.sup_l2 = std::max(out.sup_l2, l2_norm(f));
        out.sup_h2 = std::max(out.sup_h2, sobolev_norm(f, 2));
        out.min_value = std::min(out.min_value, f.min());
        out.mass_residual_max = std::max(
            out.mass_residual_max, std::fabs(two_pi * sh[0].real() - mass0));
    };
    store(0.0, zeta_hat);

    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = run.cfg.dt * static_cast<double>(k);
        const double t1 = (k + 1 == steps) ? run.cfg.T : t0 + run.cfg.dt;
        const Field& b = run.drift(k, t0);
        rate_sup_b = std::max(rate_sup_b, b.max_abs());
        rate_sup_bp = std::max(rate_sup_bp, derivative(b).max_abs());
        const double bmax =
            stepper.step(zeta_hat, b.spectrum(), nullptr, 0.0);
        if (run.cfg.check_cfl && (t1 - t0) > g.spacing() / std::max(bmax, 1e-300))
            throw SolverError("solve_linear_fp: CFL violation at t = " +
                              format_double(t0));
        if (run.enforce_floor) {
            const double rate = 0.5 * rate_sup_b * rate_sup_b + rate_sup_bp;
            const double floor = eta * std::exp(-t1 * rate);
            double mn = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            const auto& vals = stepper.padded_state_values();
            for (std::size_t j = 0; j < vals.size(); ++j)
                if (vals[j] < mn) {
                    mn = vals[j];
                    arg = j;
                }
            out.floor_margin_min = std::min(out.floor_margin_min, mn - floor);
            if (mn < floor - 1e-11 * std::max(1.0, eta))
                throw SolverError(
                    "solve_linear_fp: positivity floor violated at t = " +
                    format_double(t1) + ", x = " +
                    format_double(pi * static_cast<double>(arg) /
                                  static_cast<double>(g.size())) +
                    ", margin = " + format_double(mn - floor));
        }
        if ((k + 1) % run.cfg.store_stride == 0 || k + 1 == steps)
            store(t1, zeta_hat);
    }
    return out;
}

enum class IntermediateLevel { eps_M_kappa, M_kappa };

/// Inputs of the intermediate weighted-marginal solves.  The joint law
/// needed by Gamma_M is realized by a mean-field reference ensemble of
/// N_ref pairs co-evolved with the two PDEs.
struct IntermediateRun {
    IntermediateRun(Field rho0_, Field zeta0_)
        : rho0(std::move(rho0_)), zeta0(std::move(zeta0_)) {}

    IntermediateLevel level = IntermediateLevel::eps_M_kappa;
    const Potentials* pot = nullptr;
    Field rho0, zeta0;
    double eps = 0.2;
    double M = 10.0;
    const SampledPath* Ykappa = nullptr;
    const InitialLaw* law = nullptr;
    std::size_t N_ref = 10000;
    std::function<Substream(std::size_t)> beta_stream;
    Substream init_stream;
    PdeRunConfig cfg;
};

struct IntermediateResult {
    PdeTrajectory rho;
    PdeTrajectory zeta;
    double min_denominator = std::numeric_limits<double>::infinity();
};

/// Coupled march of (reference ensemble, linear zeta-PDE, forced rho-PDE).
/// Level eps_M_kappa: drift V' + Gamma_M(x, mu^{eps,M,kappa}), forcing
/// multiplier q zeta / (Phi_eps * zeta), ensemble = the interacting system.
/// Level M_kappa: same drift structure, forcing q, ensemble weights divided
/// by the co-evolved zeta field.
inline IntermediateResult solve_intermediate_rho(const IntermediateRun& run) {
    const TorusGrid& g = run.rho0.grid();
    const std::size_t half = g.size() / 2;
    const std::size_t steps =
        static_cast<std::size_t>(std::llround(run.cfg.T / run.cfg.dt));
    detail::SpectralStepper stepper_rho(g, run.cfg.dt), stepper_zeta(g, run.cfg.dt);

    // reference ensemble at the matching level
    ParticleEnsemble e0 = init_ensemble(*run.law, run.N_ref, run.init_stream);
    e0.eps = run.eps;
    e0.M = run.M;
    const bool mollified = run.level == IntermediateLevel::eps_M_kappa;
    ParticleSystem ens(
        std::move(e0), *run.pot, WeightForcing::single_path(),
        ParticleSystem::DriftKind::interaction,
        mollified ? ParticleSystem::DenominatorKind::mollified_empirical
                  : ParticleSystem::DenominatorKind::external_field);

    auto rho_hat = run.rho0.spectrum();
    auto zeta_hat = run.zeta0.spectrum();
    const double eta = run.zeta0.min();
    const double mass0_zeta = two_pi * zeta_hat[0].real();
    detail::MassLedger mass;
    mass.start(rho_hat);

    // mollifier transfer ratios for Phi_eps * zeta
    std::vector<double> phi_ratio;
    if (mollified) {
        phi_ratio = mollifier_fourier(MollifierParam(run.eps), static_cast<int>(half));
        for (double& r : phi_ratio)
            r *= two_pi;  // (Phi * zeta)_k = 2 pi Phi_k zeta_k
    }

    IntermediateResult out;
    Field zeta_field = Field::from_spectrum(g, zeta_hat);
    double rate_sup_b = 0.0, rate_sup_bp = 0.0;

    auto store = [&](double t) {
        out.rho.times.push_back(t);
        out.rho.fields.push_back(Field::from_spectrum(g, rho_hat));
        out.zeta.times.push_back(t);
        out.zeta.fields.push_back(zeta_field);
        out.rho.sup_l2 = std::max(out.rho.sup_l2, l2_norm(out.rho.fields.back()));
        out.rho.mass_residual_max =
            std::max(out.rho.mass_residual_max, mass.residual(rho_hat));
        out.zeta.mass_residual_max =
            std::max(out.zeta.mass_residual_max,
                     std::fabs(two_pi * zeta_hat[0].real() - mass0_zeta));
        out.zeta.min_value = std::min(out.zeta.min_value, zeta_field.min());
        out.zeta.sup_h2 =
            std::max(out.zeta.sup_h2, sobolev_norm(zeta_field, 2));
    };
    store(0.0);

    std::vector<std::complex<double>> b_hat(half + 1), force(half + 1);
    std::vector<double> dBeta(run.N_ref);
    std::vector<Substream> streams(run.N_ref);
    for (std::size_t i = 0; i < run.N_ref; ++i)
        streams[i] = run.beta_stream(i);
    const double sd = std::sqrt(run.cfg.dt);

    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = run.cfg.dt * static_cast<double>(k);
        const double t1 = (k + 1 == steps) ? run.cfg.T : t0 + run.cfg.dt;
        const double h = t1 - t0;
        const double dY = run.Ykappa->increment(t0, t1);

        // pre-step drift field b = V' + Gamma_M(x, ensemble)
        const Field gamma = ens.gamma_field(g);
        const auto& vp = run.pot->Vp.spectrum();
        const auto& gm = gamma.spectrum();
        for (std::size_t md = 0; md <= half; ++md)
            b_hat[md] = vp[md] + gm[md];
        rate_sup_b = std::max(rate_sup_b, (run.pot->Vp + gamma).max_abs());
        rate_sup_bp =
            std::max(rate_sup_bp, derivative(run.pot->Vp + gamma).max_abs());

        // forcing profile for rho
        std::fill(force.begin(), force.end(), std::complex<double>(0.0));
        std::complex<double> force_dc = 0.0;
        if (mollified) {
            // g = q zeta / (Phi_eps * zeta), recomputed each step
            std::vector<std::complex<double>> conv_hat(half + 1);
            for (std::size_t md = 0; md <= half; ++md)
                conv_hat[md] = phi_ratio[md] * zeta_hat[md];
            const Field conv = Field::from_spectrum(g, std::move(conv_hat));
            if (!(conv.min() > 0.0))
                throw SolverError(
                    "solve_intermediate_rho: mollified marginal lost "
                    "positivity");
            std::vector<double> gv(g.size());
            for (std::size_t j = 0; j < g.size(); ++j)
                gv[j] = run.pot->q.values()[j] * zeta_field.values()[j] /
                        conv.values()[j];
            const Field gfield(g, std::move(gv));
            const auto& gh = gfield.spectrum();
            for (std::size_t md = 1; md <= half; ++md)
                force[md] = gh[md] * (dY / h);
            force_dc = gh[0] * dY;
        } else {
            const auto& gh = run.pot->q.spectrum();
            for (std::size_t md = 1; md <= half; ++md)
                force[md] = gh[md] * (dY / h);
            force_dc = gh[0] * dY;
        }

        // advance the ensemble from the pre-step state
        if (!mollified)
            ens.set_external_density(&zeta_field);
        for (std::size_t i = 0; i < run.N_ref; ++i)
            dBeta[i] = sd * streams[i].normal(k);
        const double dYa[1] = {dY};
        ens.step(h, dYa, dBeta);

        // advance both PDEs from the pre-step fields
        stepper_zeta.step(zeta_hat, b_hat, nullptr, 0.0);
        stepper_rho.step(rho_hat, b_hat, &force, force_dc);
        mass.add(force_dc);

        // positivity floor on zeta (Theorem-B.3 certificate, running rate)
        zeta_field = Field::from_spectrum(g, zeta_hat);
        const double rate = 0.5 * rate_sup_b * rate_sup_b + rate_sup_bp;
        const double floor = eta * std::exp(-t1 * rate);
        const double mn = zeta_field.min();
        out.zeta.floor_margin_min =
            std::min(out.zeta.floor_margin_min, mn - floor);
        if (mn < floor - 1e-11 * std::max(1.0, eta))
            throw SolverError(
                "solve_intermediate_rho: zeta positivity floor violated at "
                "t = " + format_double(t1));

        if ((k + 1) % run.cfg.store_stride == 0 || k + 1 == steps)
            store(t1);
    }
    out.min_denominator = ens.min_denominator_seen();
    return out;
}

}  // namespace wips
