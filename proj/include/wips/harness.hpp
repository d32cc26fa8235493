#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "wips/config.hpp"
#include "wips/metrics.hpp"
#include "wips/pde.hpp"

namespace wips {

inline constexpr const char* wips_version = "1.0.0";

struct GapRow {
    double axis_value = 0.0;
    std::string test_fn;
    double mean_gap = 0.0;
    double stderr_ = 0.0;
    std::size_t replications = 0;
};

struct AxisResult {
    std::string axis;
    std::vector<GapRow> next_level;  // gap against the next ladder level
    std::vector<GapRow> vs_target;   // gap against the target solution
    std::map<std::string, std::string> diagnostics;
};

namespace detail {

struct GapSamples {
    // samples[value][fn_label] -> per-replication gaps
    std::vector<std::map<std::string, std::vector<double>>> next_level;
    std::vector<std::map<std::string, std::vector<double>>> vs_target;
};

inline void append_sample(std::map<std::string, std::vector<double>>& m,
                          const std::string& fn, double gap) {
    m[fn].push_back(gap);
}

inline std::vector<GapRow> reduce_rows(
    const std::vector<double>& values,
    const std::vector<std::map<std::string, std::vector<double>>>& samples,
    const std::vector<std::string>& fn_order) {
    std::vector<GapRow> rows;
    for (std::size_t v = 0; v < values.size(); ++v) {
        for (const auto& fn : fn_order) {
            const auto it = samples[v].find(fn);
            if (it == samples[v].end())
                continue;
            const auto& s = it->second;
            double mean = 0.0;
            for (double g : s)
                mean += g;
            mean /= static_cast<double>(s.size());
            double var = 0.0;
            for (double g : s)
                var += (g - mean) * (g - mean);
            const double se =
                s.size() > 1 ? std::sqrt(var / (static_cast<double>(s.size()) - 1.0) /
                                         static_cast<double>(s.size()))
                             : 0.0;
            rows.push_back({values[v], fn, mean, se, s.size()});
        }
    }
    return rows;
}

}  // namespace detail

/// Reproducible experiment driver: wires the particle system, the PDE
/// hierarchy, the metric layer, and the seed bookkeeping into the sweep
/// ladder (N, eps, M, kappa, m).
class Harness {
public:
    Harness(ExperimentConfig cfg, std::size_t threads = 1)
        : cfg_(std::move(cfg)),
          threads_(std::max<std::size_t>(1, threads)),
          grid_(cfg_.n),
          pot_(cfg_.make_potentials(grid_)),
          law_(cfg_.make_initial_law(grid_)),
          rng_(cfg_.seed) {
        cfg_.validate();
        fns_ = cfg_.make_test_functions();
        for (const auto& f : fns_) {
            fn_fields_.push_back(Field::sample(grid_, f.fn));
            fn_order_.push_back(f.name);
        }
        l2_order_ = {"l2"};
        for (const auto& n : fn_order_)
            l2_order_.push_back(n);
    }

    const ExperimentConfig& config() const { return cfg_; }

    AxisResult run_axis(const std::string& axis) {
        detail::GapSamples samples;
        samples.next_level.resize(cfg_.values.size());
        samples.vs_target.resize(cfg_.values.size());
        std::map<std::string, std::string> diag;
        std::mutex mtx;

        const std::size_t reps = cfg_.replications;
        std::atomic<std::size_t> next_rep{0};
        std::vector<std::thread> pool;
        // per-rep result buffers, merged in replication order afterwards
        std::vector<detail::GapSamples> per_rep(reps);
        std::vector<std::map<std::string, std::string>> per_diag(reps);
        auto worker = [&]() {
            for (;;) {
                const std::size_t r = next_rep.fetch_add(1);
                if (r >= reps)
                    return;
                per_rep[r].next_level.resize(cfg_.values.size());
                per_rep[r].vs_target.resize(cfg_.values.size());
                run_replication(axis, r, per_rep[r], per_diag[r]);
            }
        };
        const std::size_t nthreads = std::min(threads_, reps);
        for (std::size_t t = 0; t < nthreads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
        for (std::size_t r = 0; r < reps; ++r) {
            for (std::size_t v = 0; v < cfg_.values.size(); ++v) {
                for (const auto& [fn, gs] : per_rep[r].next_level[v])
                    for (double g : gs)
                        detail::append_sample(samples.next_level[v], fn, g);
                for (const auto& [fn, gs] : per_rep[r].vs_target[v])
                    for (double g : gs)
                        detail::append_sample(samples.vs_target[v], fn, g);
            }
            for (const auto& [k, v] : per_diag[r])
                diag[k] = v;
        }

        AxisResult out;
        out.axis = axis;
        const auto& order = axis == "N" || axis == "joint" ? fn_order_ : l2_order_;
        out.next_level = detail::reduce_rows(cfg_.values, samples.next_level, order);
        out.vs_target = detail::reduce_rows(cfg_.values, samples.vs_target, order);
        out.diagnostics = std::move(diag);
        return out;
    }

    std::vector<AxisResult> run_ladder() {
        std::vector<AxisResult> out;
        out.push_back(run_axis(cfg_.axis));
        return out;
    }

    /// The target (most-converged) PDE trajectory at replication 0.
    PdeTrajectory solve_target_once() const {
        const SampledPath Yfull = common_path(0, 0);
        std::vector<SampledPath> mode_full;
        if (cfg_.noise_kind == "modes") {
            const int mr = std::min<int>(cfg_.m_ref, grid_.nyquist() - 1);
            for (int z = -mr; z <= mr; ++z)
                mode_full.push_back(common_path(0, z));
        }
        return solve_target(0, Yfull, mode_full);
    }

    const std::vector<Field>& fn_fields() const { return fn_fields_; }
    const std::vector<std::string>& fn_names() const { return fn_order_; }

    /// Single base-parameter particle run (CLI `simulate`).
    ParticleRunResult simulate_once() const {
        const std::size_t r = 0;
        const SampledPath Y = common_path(r, 0);
        const SampledPath Yk = piecewise_linear_approx(Y, cfg_.kappa);
        std::vector<SampledPath> mode_paths;
        std::vector<const SampledPath*> paths;
        WeightForcing forcing = WeightForcing::none();
        std::unique_ptr<NoiseSpec> spec;
        if (cfg_.noise_kind == "single") {
            forcing = WeightForcing::single_path();
            paths = {&Yk};
        } else if (cfg_.noise_kind == "modes") {
            spec = std::make_unique<NoiseSpec>(cfg_.make_noise());
            forcing = WeightForcing::mode_family(*spec);
            const int m = spec->max_mode();
            mode_paths.reserve(2 * static_cast<std::size_t>(m) + 1);
            for (int z = -m; z <= m; ++z)
                mode_paths.push_back(
                    piecewise_linear_approx(common_path(r, z), cfg_.kappa));
            for (const auto& p : mode_paths)
                paths.push_back(&p);
        }
        auto e0 = init_ensemble(law_, cfg_.N, rng_.stream(StreamKind::init, r, 0));
        e0.eps = cfg_.eps;
        e0.M = cfg_.M;
        e0.kappa = cfg_.kappa;
        e0.m = cfg_.noise_kind == "modes" ? spec->max_mode() : 0;
        ParticleRunConfig rc;
        rc.T = cfg_.T;
        rc.dt = cfg_.dt;
        rc.cutoff_variant = cfg_.make_cutoff_variant();
        rc.observable_stride = cfg_.observable_stride;
        return run_particle_system(
            std::move(e0), pot_, forcing, paths, rc,
            [&](std::size_t i) { return rng_.stream(StreamKind::particle, r, i); },
            fns_, cfg_.snapshots);
    }

private:
    SampledPath common_path(std::size_t rep, int z) const {
        return sample_brownian(cfg_.T, cfg_.dt, rng_.mode_stream(rep, z));
    }

    PdeRunConfig pde_cfg() const {
        PdeRunConfig c;
        c.T = cfg_.T;
        c.dt = cfg_.dt;
        c.store_stride = cfg_.observable_stride;
        return c;
    }

    /// Target trajectory: the most-converged PDE (full driving path(s)).
    PdeTrajectory solve_target(std::size_t rep, const SampledPath& Yfull,
                               const std::vector<SampledPath>& mode_full) const {
        MkvRun run{law_.rho0(), &pot_, {}, pde_cfg()};
        if (cfg_.noise_kind == "single") {
            run.forcing.push_back({pot_.q, &Yfull});
        } else if (cfg_.noise_kind == "modes") {
            const NoiseSpec spec = cfg_.make_noise();
            const int mr = std::min<int>(cfg_.m_ref, grid_.nyquist() - 1);
            for (int z = -mr; z <= mr; ++z) {
                const double lz = z == 0 ? spec.lambda(0)
                                         : (std::abs(z) <= spec.max_mode()
                                                ? spec.lambda(z)
                                                : 0.0);
                if (lz == 0.0)
                    continue;
                run.forcing.push_back(
                    {mode_profile(grid_, z, lz),
                     &mode_full[static_cast<std::size_t>(z + mr)]});
            }
        }
        return solve_mkv(run);
    }

    void gaps_vs(const PdeTrajectory& traj, const PdeTrajectory& ref,
                 std::map<std::string, std::vector<double>>& sink) const {
        detail::append_sample(sink, "l2", sup_l2_gap(traj, ref));
        for (std::size_t f = 0; f < fns_.size(); ++f)
            detail::append_sample(
                sink, fn_order_[f],
                sup_pairing_gap(pairing_trajectory(traj, fn_fields_[f]),
                                pairing_trajectory(ref, fn_fields_[f])));
    }

    void particle_gaps_vs(const ParticleRunResult& run,
                          const std::vector<SampledPath>& ref_paths,
                          std::map<std::string, std::vector<double>>& sink) const {
        for (std::size_t f = 0; f < fns_.size(); ++f)
            detail::append_sample(
                sink, fn_order_[f],
                sup_pairing_gap(SampledPath(run.times, run.observables[f]),
                                ref_paths[f]));
    }

    std::vector<SampledPath> pairing_paths(const PdeTrajectory& traj) const {
        std::vector<SampledPath> out;
        out.reserve(fns_.size());
        for (const auto& f : fn_fields_)
            out.push_back(pairing_trajectory(traj, f));
        return out;
    }

    IntermediateResult run_intermediate(IntermediateLevel level, double eps,
                                        double M, const SampledPath& Yk,
                                        std::size_t rep) const {
        IntermediateRun run(law_.rho0(), law_.zeta0());
        run.level = level;
        run.pot = &pot_;
        run.eps = eps;
        run.M = M;
        run.Ykappa = &Yk;
        run.law = &law_;
        run.N_ref = cfg_.N_ref;
        run.beta_stream = [this, rep](std::size_t i) {
            return rng_.stream(StreamKind::reference, rep, i);
        };
        run.init_stream = rng_.stream(StreamKind::init, rep, 1);
        run.cfg = pde_cfg();
        return solve_intermediate_rho(run);
    }

    ParticleRunResult run_particles(std::size_t N, double eps, double M,
                                    const std::vector<const SampledPath*>& paths,
                                    const WeightForcing& forcing,
                                    std::size_t rep) const {
        auto e0 = init_ensemble(law_, N, rng_.stream(StreamKind::init, rep, 0));
        e0.eps = eps;
        e0.M = M;
        e0.kappa = cfg_.kappa;
        ParticleRunConfig rc;
        rc.T = cfg_.T;
        rc.dt = cfg_.dt;
        rc.cutoff_variant = cfg_.make_cutoff_variant();
        rc.observable_stride = 1;
        return run_particle_system(
            std::move(e0), pot_, forcing, paths, rc,
            [this, rep](std::size_t i) {
                return rng_.stream(StreamKind::particle, rep, i);
            },
            fns_);
    }

    void run_replication(const std::string& axis, std::size_t rep,
                         detail::GapSamples& out,
                         std::map<std::string, std::string>& diag) const {
        const SampledPath Yfull = common_path(rep, 0);
        const SampledPath Yk = piecewise_linear_approx(Yfull, cfg_.kappa);
        // zero driver stands in for the paths when the forcing is disabled
        const SampledPath zero_path({0.0, cfg_.T}, {0.0, 0.0});
        const bool forced = cfg_.noise_kind != "none";
        const SampledPath& Yfull_e = forced ? Yfull : zero_path;
        const SampledPath& Yk_e = forced ? Yk : zero_path;

        std::vector<SampledPath> mode_full;
        if (cfg_.noise_kind == "modes") {
            const int mr = std::min<int>(cfg_.m_ref, grid_.nyquist() - 1);
            for (int z = -mr; z <= mr; ++z)
                mode_full.push_back(common_path(rep, z));
        }

        // particle-run forcing at this replication's common noise
        std::unique_ptr<NoiseSpec> spec_hold;
        std::vector<SampledPath> mode_kappa_paths;
        std::vector<const SampledPath*> particle_paths;
        WeightForcing particle_forcing = WeightForcing::none();
        if (cfg_.noise_kind == "single") {
            particle_forcing = WeightForcing::single_path();
            particle_paths = {&Yk};
        } else if (cfg_.noise_kind == "modes") {
            spec_hold = std::make_unique<NoiseSpec>(cfg_.make_noise());
            particle_forcing = WeightForcing::mode_family(*spec_hold);
            const int mm = spec_hold->max_mode();
            const int mr = std::min<int>(cfg_.m_ref, grid_.nyquist() - 1);
            for (int z = -mm; z <= mm; ++z)
                mode_kappa_paths.push_back(piecewise_linear_approx(
                    mode_full[static_cast<std::size_t>(z + mr)], cfg_.kappa));
            for (const auto& p : mode_kappa_paths)
                particle_paths.push_back(&p);
        }

        if (axis == "N") {
            // reference for the next-level gap
            if (cfg_.noise_kind == "modes" && cfg_.reference == "pde")
                throw DomainError(
                    "Harness: mode-family N sweeps need an ensemble reference");
            std::vector<SampledPath> ref_paths;
            if (cfg_.reference == "pde") {
                const auto ref = run_intermediate(IntermediateLevel::eps_M_kappa,
                                                  cfg_.eps, cfg_.M, Yk_e, rep);
                ref_paths = pairing_paths(ref.rho);
                diag["n_axis.ref_min_denominator"] =
                    format_double(ref.min_denominator);
            } else {
                const std::size_t K =
                    std::stoul(cfg_.reference.substr(std::string("ensemble:").size()));
                auto e0 = init_ensemble(law_, K, rng_.stream(StreamKind::init, rep, 1));
                e0.eps = cfg_.eps;
                e0.M = cfg_.M;
                ParticleRunConfig rc;
                rc.T = cfg_.T;
                rc.dt = cfg_.dt;
                rc.cutoff_variant = cfg_.make_cutoff_variant();
                rc.observable_stride = 1;
                const auto ref = run_particle_system(
                    std::move(e0), pot_, particle_forcing, particle_paths, rc,
                    [this, rep](std::size_t i) {
                        return rng_.stream(StreamKind::reference, rep, i);
                    },
                    fns_);
                for (std::size_t f = 0; f < fns_.size(); ++f)
                    ref_paths.emplace_back(ref.times, ref.observables[f]);
                diag["n_axis.ref_min_denominator"] =
                    format_double(ref.min_denominator);
            }
            const auto target = solve_target(rep, Yfull, mode_full);
            const auto target_paths = pairing_paths(target);
            for (std::size_t v = 0; v < cfg_.values.size(); ++v) {
                const auto run = run_particles(
                    static_cast<std::size_t>(cfg_.values[v]), cfg_.eps, cfg_.M,
                    particle_paths, particle_forcing, rep);
                particle_gaps_vs(run, ref_paths, out.next_level[v]);
                particle_gaps_vs(run, target_paths, out.vs_target[v]);
            }
        } else if (axis == "joint") {
            const auto target = solve_target(rep, Yfull, mode_full);
            const auto target_paths = pairing_paths(target);
            for (std::size_t v = 0; v < cfg_.values.size(); ++v) {
                const auto run = run_particles(
                    static_cast<std::size_t>(cfg_.values[v]), cfg_.joint_eps[v],
                    cfg_.M, particle_paths, particle_forcing, rep);
                particle_gaps_vs(run, target_paths, out.next_level[v]);
                particle_gaps_vs(run, target_paths, out.vs_target[v]);
            }
        } else if (axis == "eps") {
            const auto next = run_intermediate(IntermediateLevel::M_kappa,
                                               cfg_.eps, cfg_.M, Yk_e, rep);
            const auto target = solve_target(rep, Yfull, mode_full);
            for (std::size_t v = 0; v < cfg_.values.size(); ++v) {
                const auto lvl = run_intermediate(IntermediateLevel::eps_M_kappa,
                                                  cfg_.values[v], cfg_.M, Yk_e, rep);
                gaps_vs(lvl.rho, next.rho, out.next_level[v]);
                gaps_vs(lvl.rho, target, out.vs_target[v]);
                diag["eps_axis.mass_residual_max"] =
                    format_double(lvl.rho.mass_residual_max);
                diag["eps_axis.zeta_floor_margin_min"] =
                    format_double(lvl.zeta.floor_margin_min);
            }
        } else if (axis == "M") {
            MkvRun krun{law_.rho0(), &pot_, {{pot_.q, &Yk_e}}, pde_cfg()};
            const auto next = solve_mkv(krun);
            const auto target = solve_target(rep, Yfull, mode_full);
            for (std::size_t v = 0; v < cfg_.values.size(); ++v) {
                const auto lvl = run_intermediate(IntermediateLevel::M_kappa,
                                                  cfg_.eps, cfg_.values[v], Yk_e, rep);
                gaps_vs(lvl.rho, next, out.next_level[v]);
                gaps_vs(lvl.rho, target, out.vs_target[v]);
                // Sobolev sanity band for the marginal across the M sweep
                diag["M_axis.zeta_sup_h2_v" + std::to_string(v)] =
                    format_double(lvl.zeta.sup_h2);
            }
        } else if (axis == "kappa") {
            const auto target = solve_target(rep, Yfull, mode_full);
            // solver self-convergence of the reference pair
            const SampledPath Yref = piecewise_linear_approx(Yfull_e, cfg_.kappa_ref);
            const SampledPath Yref2 =
                piecewise_linear_approx(Yfull_e, cfg_.kappa_ref / 2);
            MkvRun rr{law_.rho0(), &pot_, {{pot_.q, &Yref}}, pde_cfg()};
            const auto ref = solve_mkv(rr);
            MkvRun rr2{law_.rho0(), &pot_, {{pot_.q, &Yref2}}, pde_cfg()};
            const auto ref2 = solve_mkv(rr2);
            diag["kappa_axis.self_tolerance_r" + std::to_string(rep)] =
                format_double(sup_l2_gap(ref, ref2));
            for (std::size_t v = 0; v < cfg_.values.size(); ++v) {
                const SampledPath Yv = piecewise_linear_approx(
                    Yfull_e, static_cast<int>(cfg_.values[v]));
                MkvRun vr{law_.rho0(), &pot_, {{pot_.q, &Yv}}, pde_cfg()};
                const auto lvl = solve_mkv(vr);
                gaps_vs(lvl, target, out.next_level[v]);
                gaps_vs(lvl, target, out.vs_target[v]);
                diag["kappa_axis.mass_residual_max"] =
                    format_double(lvl.mass_residual_max);
            }
        } else if (axis == "m") {
            const NoiseSpec spec = cfg_.make_noise();
            const int mr = std::min<int>(cfg_.m_ref, grid_.nyquist() - 1);
            std::vector<SampledPath> mode_kappa;
            for (int z = -mr; z <= mr; ++z)
                mode_kappa.push_back(piecewise_linear_approx(
                    mode_full[static_cast<std::size_t>(z + mr)], cfg_.kappa));
            auto solve_modes = [&](int mmax,
                                   const std::vector<SampledPath>& paths) {
                MkvRun run{law_.rho0(), &pot_, {}, pde_cfg()};
                for (int z = -mmax; z <= mmax; ++z) {
                    const double lz =
                        std::abs(z) <= spec.max_mode() ? spec.lambda(z) : 0.0;
                    if (lz == 0.0)
                        continue;
                    run.forcing.push_back(
                        {mode_profile(grid_, z, lz),
                         &paths[static_cast<std::size_t>(z + mr)]});
                }
                return solve_mkv(run);
            };
            const auto next = solve_modes(mr, mode_kappa);
            const auto target = solve_modes(mr, mode_full);
            for (std::size_t v = 0; v < cfg_.values.size(); ++v) {
                const auto lvl =
                    solve_modes(static_cast<int>(cfg_.values[v]), mode_kappa);
                gaps_vs(lvl, next, out.next_level[v]);
                gaps_vs(lvl, target, out.vs_target[v]);
            }
        } else {
            throw DomainError("Harness: unknown axis " + axis);
        }
    }

    ExperimentConfig cfg_;
    std::size_t threads_;
    TorusGrid grid_;
    Potentials pot_;
    InitialLaw law_;
    RngStreams rng_;
    std::vector<TestFunction> fns_;
    std::vector<Field> fn_fields_;
    std::vector<std::string> fn_order_, l2_order_;
};

/// gaps.csv: axis_value, test_fn, mean_gap, stderr, replications.
inline void write_gaps_csv(const std::vector<GapRow>& rows, std::ostream& os) {
    os << "axis_value,test_fn,mean_gap,stderr,replications\n";
    for (const auto& r : rows)
        os << format_double(r.axis_value) << ',' << r.test_fn << ','
           << format_double(r.mean_gap) << ',' << format_double(r.stderr_)
           << ',' << r.replications << '\n';
}

/// observables_<run>.csv: t, then one column per configured test function.
inline void write_observables_csv(const ParticleRunResult& run,
                                  std::ostream& os) {
    os << "t";
    for (const auto& n : run.fn_names)
        os << ',' << n;
    os << '\n';
    for (std::size_t k = 0; k < run.times.size(); ++k) {
        os << format_double(run.times[k]);
        for (std::size_t f = 0; f < run.observables.size(); ++f)
            os << ',' << format_double(run.observables[f][k]);
        os << '\n';
    }
}

/// Ensemble snapshots: t, i, x, a.
inline void write_snapshots_csv(const ParticleRunResult& run,
                                std::ostream& os) {
    os << "t,i,x,a\n";
    for (const auto& [t, snap] : run.snapshots)
        for (std::size_t i = 0; i < snap.size(); ++i)
            os << format_double(t) << ',' << i << ','
               << format_double(snap.x[i]) << ',' << format_double(snap.a[i])
               << '\n';
}

/// Line-delimited manifest with config hash, seeds, versions, diagnostics,
/// and the canonical config embedded for bit-exact re-runs.  Wall-clock
/// fields are informational and excluded from reproducibility comparisons.
inline void emit_manifest(const ExperimentConfig& cfg,
                          const std::string& command,
                          const std::map<std::string, std::string>& diagnostics,
                          double wallclock_seconds, std::ostream& os) {
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(cfg.hash()));
    os << "wips_manifest_version = 1\n"
       << "wips_version = " << wips_version << "\n"
       << "command = " << command << "\n"
       << "config_hash = " << hex << "\n"
       << "master_seed = " << cfg.seed << "\n";
    for (const auto& [k, v] : diagnostics)
        os << "diag." << k << " = " << v << "\n";
    os << "wallclock_seconds = " << format_double(wallclock_seconds)
       << "  # excluded from comparisons\n";
    os << "[config]\n" << cfg.canonical_text();
}

}  // namespace wips
