// Acceptance suite: one criterion per function, one pass/fail line each.
// Every tolerance is pinned here, in code.  Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wips/harness.hpp"

using namespace wips;

namespace {

struct Check {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty())
                detail += "; ";
            detail += what;
        }
    }
    void note(const std::string& s) {
        if (!detail.empty())
            detail += "; ";
        detail += s;
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return num / den;
}

// ---------------------------------------------------------------------------
// 1. Spectral exactness of the heat semigroup on basis modes |z| <= 8.
Check criterion1() {
    Check c;
    TorusGrid g(256);
    for (int z = -8; z <= 8; ++z) {
        for (double t : {0.05, 0.4, 1.3}) {
            const Field e = Field::basis(g, z);
            const Field h = heat_propagate(e, t);
            const double factor = std::exp(-t * static_cast<double>(z) * z);
            for (std::size_t k = 0; k < h.spectrum().size(); ++k) {
                const auto expect = factor * e.spectrum()[k];
                const double err = std::abs(h.spectrum()[k] - expect) /
                                   std::max(1.0, std::abs(expect));
                c.require(err <= 1e-12, "mode " + std::to_string(z) +
                                            " rel err " + fmt(err));
            }
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// 2. Forced mass identity |<1,rho_t> - <1,rho_0> - <1,q>(Y_t - Y_0)| <= 1e-10
//    over 20 random (V, F, q, Y^kappa) presets.
Check criterion2() {
    Check c;
    TorusGrid g(128);
    RngStreams rng(0xACC2);
    std::mt19937 gen(22);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    std::uniform_int_distribution<int> kap(4, 64);
    double worst = 0.0;

    for (int inst = 0; inst < 20; ++inst) {
        const double a1 = amp(gen), a2 = amp(gen), b1 = amp(gen),
                     b2 = amp(gen), q0 = amp(gen), q1 = amp(gen), q2 = amp(gen);
        Potentials pot(
            Field::sample(g, [&](double x) { return a1 * std::cos(x) + 0.3 * a2 * std::sin(2 * x); }),
            Field::sample(g, [&](double x) { return b1 * std::cos(x) + 0.3 * b2 * std::cos(2 * x); }),
            Field::zero(g));
        const Field q = Field::sample(g, [&](double x) {
            return 0.5 * q0 + q1 * std::cos(x) + 0.4 * q2 * std::sin(3 * x);
        });
        const auto Y = sample_brownian(0.5, 5e-4, rng.mode_stream(static_cast<std::size_t>(inst), 0));
        const auto Yk = piecewise_linear_approx(Y, kap(gen));
        const Field rho0 = Field::sample(g, [&](double x) {
            return (1.0 + 0.4 * a2 * std::cos(x)) / two_pi;
        });
        MkvRun run{rho0, &pot, {{q, &Yk}}, {0.5, 5e-4, 5, true}};
        const auto traj = solve_mkv(run);
        const double mass0 = integral(rho0);
        const double q_mass = integral(q);
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            const double expect =
                mass0 + q_mass * (Yk(traj.times[i]) - Yk(0.0));
            worst = std::max(worst,
                             std::fabs(integral(traj.fields[i]) - expect));
        }
    }
    c.require(worst <= 1e-10, "max residual " + fmt(worst));
    c.note("max mass residual " + fmt(worst));
    return c;
}

// ---------------------------------------------------------------------------
// 3. Linear FP: mass conserved to 1e-12 and positivity floor
//    min_x zeta_t >= (min zeta_0) e^{-t a(b)} for 10 random static drifts.
Check criterion3() {
    Check c;
    TorusGrid g(128);
    std::mt19937 gen(33);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    double worst_mass = 0.0, worst_margin = 1e300;
    for (int inst = 0; inst < 10; ++inst) {
        const double d1 = 1.5 * amp(gen), d2 = amp(gen), d3 = 0.5 * amp(gen);
        const Field drift = Field::sample(g, [&](double x) {
            return d1 * std::sin(x) + d2 * std::cos(2 * x) + d3 * std::sin(3 * x);
        });
        const double z1 = 0.45 * amp(gen), z2 = 0.3 * amp(gen);
        Field zeta0 = Field::sample(g, [&](double x) {
            return (1.0 + z1 * std::cos(x) + z2 * std::sin(2 * x)) / two_pi;
        });
        zeta0 = (1.0 / integral(zeta0)) * zeta0;
        LinearFpRun run{zeta0,
                        [&](std::size_t, double) -> const Field& { return drift; },
                        {0.5, 2.5e-4, 10, true},
                        true};
        try {
            const auto traj = solve_linear_fp(run);
            worst_mass = std::max(worst_mass, traj.mass_residual_max);
            worst_margin = std::min(worst_margin, traj.floor_margin_min);
        } catch (const SolverError& e) {
            c.require(false, std::string("solver: ") + e.what());
        }
    }
    c.require(worst_mass <= 1e-12, "mass residual " + fmt(worst_mass));
    c.require(worst_margin >= 0.0, "floor margin " + fmt(worst_margin));
    c.note("mass " + fmt(worst_mass) + ", min floor margin " + fmt(worst_margin));
    return c;
}

// ---------------------------------------------------------------------------
// 4. Mollifier normalization (1e-10 on n = 1024) and pointwise floor.
Check criterion4() {
    Check c;
    TorusGrid g(1024);
    for (double eps : {0.5, 0.2, 0.1, 0.05}) {
        MollifierParam p(eps);
        const Field phi =
            Field::sample(g, [&](double x) { return mollifier_eval(p, x); });
        const double mass_err = std::fabs(integral(phi) - 1.0);
        c.require(mass_err <= 1e-10,
                  "eps " + fmt(eps) + " mass err " + fmt(mass_err));
        const double floor = mollifier_floor(p);
        for (std::size_t j = 0; j < g.size(); ++j)
            c.require(phi.values()[j] >= floor,
                      "eps " + fmt(eps) + " floor violated");
    }
    return c;
}

// ---------------------------------------------------------------------------
// 5. Lipschitz bounds of Gamma_M and Xi_eps over 1e4 random instances,
//    W_2 from the exact assignment solver; zero violations.
Check criterion5() {
    Check c;
    TorusGrid g(256);
    Potentials pot(Field::sample(g, [](double x) { return std::cos(x); }),
                   Field::sample(g, [](double x) { return std::cos(x); }),
                   Field::basis(g, 1));
    const double M = 2.0, eps = 0.4;
    const double Kg = gamma_lipschitz_sq_constant(pot, 0, M);
    const double Kx = xi_lipschitz_sq_constant(pot, eps);

    std::mt19937 gen(55);
    std::uniform_real_distribution<double> ux(0.0, two_pi);
    std::uniform_real_distribution<double> ua(-2.5, 2.5);
    std::uniform_int_distribution<int> cnt(4, 16);
    int violations_g = 0, violations_x = 0;

    for (int inst = 0; inst < 10000; ++inst) {
        const int n = cnt(gen);
        std::vector<std::pair<double, double>> mu(static_cast<std::size_t>(n)),
            nu(static_cast<std::size_t>(n));
        std::vector<ProductPoint> pm(static_cast<std::size_t>(n)),
            pn(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            mu[static_cast<std::size_t>(i)] = {ux(gen), 1.0 + ua(gen)};
            nu[static_cast<std::size_t>(i)] = {ux(gen), 1.0 + ua(gen)};
            pm[static_cast<std::size_t>(i)] = {mu[static_cast<std::size_t>(i)].first,
                                               mu[static_cast<std::size_t>(i)].second};
            pn[static_cast<std::size_t>(i)] = {nu[static_cast<std::size_t>(i)].first,
                                               nu[static_cast<std::size_t>(i)].second};
        }
        const double x = ux(gen), y = ux(gen);
        const double w2 = wasserstein2_exact(pm, pn);
        const double dx = torus_distance(x, y);
        const double rhs = dx * dx + w2 * w2;

        const double dg = gamma_m_discrete(x, mu, M, pot) -
                          gamma_m_discrete(y, nu, M, pot);
        if (dg * dg > Kg * rhs + 1e-12)
            ++violations_g;
        const double dxi = xi_eps_discrete(x, mu, eps, pot) -
                           xi_eps_discrete(y, nu, eps, pot);
        if (dxi * dxi > Kx * rhs + 1e-12)
            ++violations_x;
    }
    c.require(violations_g == 0,
              std::to_string(violations_g) + " Gamma_M violations");
    c.require(violations_x == 0,
              std::to_string(violations_x) + " Xi_eps violations");
    return c;
}

// ---------------------------------------------------------------------------
// 6. Wasserstein oracle: brute-force equality at n = 5 (200 instances) and
//    the triangle inequality on 1e3 triples.
Check criterion6() {
    Check c;
    std::mt19937 gen(66);
    std::uniform_real_distribution<double> ux(0.0, two_pi);
    std::uniform_real_distribution<double> ua(-2.0, 2.0);
    auto cloud = [&](int n) {
        std::vector<ProductPoint> out(static_cast<std::size_t>(n));
        for (auto& p : out) {
            p.x = ux(gen);
            p.a = ua(gen);
        }
        return out;
    };
    for (int inst = 0; inst < 200; ++inst) {
        const auto P = cloud(5), Q = cloud(5);
        std::vector<int> perm{0, 1, 2, 3, 4};
        double best = 1e300;
        do {
            double acc = 0.0;
            for (int i = 0; i < 5; ++i) {
                const double d = product_distance(
                    P[static_cast<std::size_t>(i)],
                    Q[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
                acc += d * d;
            }
            best = std::min(best, acc);
        } while (std::next_permutation(perm.begin(), perm.end()));
        const double brute = std::sqrt(best / 5.0);
        const double solver = wasserstein2_exact(P, Q);
        c.require(solver == brute, "instance " + std::to_string(inst) +
                                       " solver " + fmt(solver) + " vs brute " +
                                       fmt(brute));
    }
    for (int inst = 0; inst < 1000; ++inst) {
        const auto A = cloud(8), B = cloud(8), C = cloud(8);
        c.require(wasserstein2_exact(A, C) <=
                      wasserstein2_exact(A, B) + wasserstein2_exact(B, C) + 1e-10,
                  "triangle violated");
    }
    return c;
}

// ---------------------------------------------------------------------------
// 7. N-convergence at fixed common path: gaps decrease monotonically over
//    N in {250, 1000, 4000} (R = 16) and the log-log slope lies in
//    [-0.8, -0.25] for f in {e-1, e1, 1}.
Check criterion7(std::size_t threads) {
    Check c;
    ExperimentConfig cfg;
    cfg.n = 256;
    cfg.T = 1.0;
    cfg.dt = 2e-3;
    cfg.V = "cos";
    cfg.F = "cos";
    cfg.q = "e1";
    cfg.zeta0 = "uniform";
    cfg.weights = "normal 1 0.5";
    cfg.noise_kind = "single";
    cfg.axis = "N";
    cfg.values = {250, 1000, 4000};
    cfg.eps = 0.2;
    cfg.M = 10.0;
    cfg.kappa = 64;
    cfg.replications = 16;
    cfg.reference = "ensemble:16000";
    cfg.test_functions = {"e-1", "e1", "one"};
    cfg.seed = 0xACC7;
    Harness h(cfg, threads);
    const auto res = h.run_axis("N");

    for (const auto& fn : cfg.test_functions) {
        std::vector<double> gaps, logs, logN;
        for (const auto& row : res.next_level)
            if (row.test_fn == fn)
                gaps.push_back(row.mean_gap);
        if (gaps.size() != 3) {
            c.require(false, "missing rows for " + fn);
            continue;
        }
        c.require(gaps[0] > gaps[1] && gaps[1] > gaps[2],
                  fn + " gaps not monotone: " + fmt(gaps[0]) + ", " +
                      fmt(gaps[1]) + ", " + fmt(gaps[2]));
        for (std::size_t i = 0; i < 3; ++i) {
            logs.push_back(std::log(gaps[i]));
            logN.push_back(std::log(cfg.values[i]));
        }
        const double slope = lsq_slope(logN, logs);
        c.require(slope >= -0.8 && slope <= -0.25,
                  fn + " slope " + fmt(slope) + " outside [-0.8, -0.25]");
        c.note(fn + " slope " + fmt(slope));
    }
    return c;
}

// ---------------------------------------------------------------------------
// 8. Ladder trends: each swept gap sequence strictly decreasing; the
//    kappa sweep additionally lands below 2x the solver self-convergence
//    tolerance at kappa = 128.
ExperimentConfig ladder_base() {
    ExperimentConfig cfg;
    cfg.n = 256;
    cfg.T = 1.0;
    cfg.dt = 5e-4;
    cfg.V = "cos";
    cfg.F = "cos";
    cfg.q = "e1";
    cfg.zeta0 = "uniform";
    cfg.weights = "normal 1 0.5";
    cfg.noise_kind = "single";
    cfg.N = 1000;
    cfg.eps = 0.2;
    cfg.M = 4.0;
    cfg.kappa = 64;
    cfg.kappa_ref = 1024;
    cfg.replications = 1;
    cfg.N_ref = 10000;
    cfg.test_functions = {"one", "e1", "e-1"};
    cfg.seed = 0xACC8;
    cfg.observable_stride = 4;
    return cfg;
}

std::vector<double> l2_gaps(const AxisResult& res) {
    std::vector<double> out;
    for (const auto& row : res.next_level)
        if (row.test_fn == "l2")
            out.push_back(row.mean_gap);
    return out;
}

Check criterion8(std::size_t threads) {
    Check c;
    // eps sweep
    {
        auto cfg = ladder_base();
        cfg.axis = "eps";
        cfg.values = {0.4, 0.2, 0.1};
        cfg.dt = 1e-3;
        const auto res = Harness(cfg, threads).run_axis("eps");
        const auto gaps = l2_gaps(res);
        c.require(gaps.size() == 3 && gaps[0] > gaps[1] && gaps[1] > gaps[2],
                  "eps gaps not strictly decreasing: " + fmt(gaps[0]) + ", " +
                      fmt(gaps[1]) + ", " + fmt(gaps[2]));
        c.note("eps: " + fmt(gaps[0]) + " > " + fmt(gaps[1]) + " > " +
               fmt(gaps[2]));
    }
    // M sweep
    {
        auto cfg = ladder_base();
        cfg.axis = "M";
        cfg.values = {1.0, 2.0, 4.0};
        cfg.dt = 1e-3;
        const auto res = Harness(cfg, threads).run_axis("M");
        const auto gaps = l2_gaps(res);
        c.require(gaps.size() == 3 && gaps[0] > gaps[1] && gaps[1] > gaps[2],
                  "M gaps not strictly decreasing: " + fmt(gaps[0]) + ", " +
                      fmt(gaps[1]) + ", " + fmt(gaps[2]));
        // marginal H2 stays in a sane band across the sweep
        for (const auto& [k, v] : res.diagnostics)
            if (k.rfind("M_axis.zeta_sup_h2", 0) == 0)
                c.require(std::isfinite(std::stod(v)) && std::stod(v) < 1e6,
                          "zeta H2 diagnostic out of band: " + v);
        c.note("M: " + fmt(gaps[0]) + " > " + fmt(gaps[1]) + " > " +
               fmt(gaps[2]));
    }
    // kappa sweep (PDE only) with the self-convergence clause; averaged over
    // a few common-noise realizations to stabilize the sup statistics
    {
        auto cfg = ladder_base();
        cfg.axis = "kappa";
        cfg.values = {8, 32, 128};
        cfg.kappa_ref = 512;
        cfg.replications = 4;
        const auto res = Harness(cfg, threads).run_axis("kappa");
        const auto gaps = l2_gaps(res);
        c.require(gaps.size() == 3 && gaps[0] > gaps[1] && gaps[1] > gaps[2],
                  "kappa gaps not strictly decreasing: " + fmt(gaps[0]) + ", " +
                      fmt(gaps[1]) + ", " + fmt(gaps[2]));
        double tol = 0.0;
        std::size_t tol_count = 0;
        for (const auto& [k, v] : res.diagnostics)
            if (k.rfind("kappa_axis.self_tolerance", 0) == 0) {
                tol += std::stod(v);
                ++tol_count;
            }
        tol /= static_cast<double>(tol_count);
        c.require(gaps[2] <= 2.0 * tol,
                  "kappa=128 gap " + fmt(gaps[2]) +
                      " above 2x self tolerance " + fmt(tol));
        c.note("kappa: " + fmt(gaps[0]) + " > " + fmt(gaps[1]) + " > " +
               fmt(gaps[2]) + ", self tol " + fmt(tol));
    }
    // m sweep (PDE only, mode family |z|^-2)
    {
        auto cfg = ladder_base();
        cfg.axis = "m";
        cfg.noise_kind = "modes";
        cfg.lambda_decay = {1.0, 2.0, 64.0};
        cfg.m_ref = 64;
        cfg.values = {2, 8, 32};
        const auto res = Harness(cfg, threads).run_axis("m");
        const auto gaps = l2_gaps(res);
        c.require(gaps.size() == 3 && gaps[0] > gaps[1] && gaps[1] > gaps[2],
                  "m gaps not strictly decreasing: " + fmt(gaps[0]) + ", " +
                      fmt(gaps[1]) + ", " + fmt(gaps[2]));
        c.note("m: " + fmt(gaps[0]) + " > " + fmt(gaps[1]) + " > " +
               fmt(gaps[2]));
    }
    return c;
}

// ---------------------------------------------------------------------------
// 9. Weight freeze under zero forcing, and the unforced reduction of the
//    PDE target (nonnegative, unit mass).
Check criterion9() {
    Check c;
    TorusGrid g(256);
    RngStreams rng(0xACC9);
    Potentials pot(Field::sample(g, [](double x) { return std::cos(x); }),
                   Field::sample(g, [](double x) { return std::cos(x); }),
                   Field::zero(g));
    const InitialLaw law(Field::constant(g, 1.0 / two_pi),
                         WeightMarginal::normal(1.0, 0.5));
    auto e0 = init_ensemble(law, 512, rng.stream(StreamKind::init, 0, 0));
    e0.eps = 0.2;
    e0.M = 10.0;
    const auto a0 = e0.a;
    ParticleRunConfig rc;
    rc.T = 0.3;
    rc.dt = 1e-3;
    rc.observable_stride = 1;
    const auto run = run_particle_system(
        std::move(e0), pot, WeightForcing::none(), {}, rc,
        [&](std::size_t i) { return rng.stream(StreamKind::particle, 0, i); },
        {make_test_function("one")});
    for (std::size_t i = 0; i < a0.size(); ++i)
        c.require(run.final_state.a[i] == a0[i], "weight drifted");
    for (std::size_t k = 1; k < run.times.size(); ++k)
        c.require(run.observables[0][k] == run.observables[0][0],
                  "unit pairing drifted");

    // PDE target reduces to the unforced MKV equation
    const Field rho0 = Field::sample(
        g, [](double x) { return (1.0 + 0.3 * std::cos(x)) / two_pi; });
    MkvRun runp{rho0, &pot, {}, {1.0, 5e-4, 20, true}};
    const auto traj = solve_mkv(runp);
    c.require(traj.min_value >= -1e-10, "negative density " + fmt(traj.min_value));
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        c.require(std::fabs(integral(traj.fields[i]) - 1.0) <= 1e-10,
                  "mass drifted");
    c.note("min density " + fmt(traj.min_value));
    return c;
}

// ---------------------------------------------------------------------------
// 10. Stationary oracle: V = cos, F = q = 0 relaxes to Z^{-1} e^{-V}.
Check criterion10() {
    Check c;
    TorusGrid g(256);
    Potentials pot(Field::sample(g, [](double x) { return std::cos(x); }),
                   Field::zero(g), Field::zero(g));
    MkvRun run{Field::constant(g, 1.0 / two_pi), &pot, {},
               {50.0, 5e-4, 200000, true}};
    const auto traj = solve_mkv(run);
    const Field gibbs_raw =
        Field::sample(g, [](double x) { return std::exp(-std::cos(x)); });
    const Field gibbs = (1.0 / integral(gibbs_raw)) * gibbs_raw;
    const double gap = (traj.fields.back() - gibbs).max_abs();
    c.require(gap <= 1e-6, "sup gap " + fmt(gap));
    c.note("sup gap " + fmt(gap));
    return c;
}

// ---------------------------------------------------------------------------
// 11. Tail condition and eigenvalue decay check.
Check criterion11() {
    Check c;
    RngStreams rng(0xACCB);
    const int m = 64;
    const auto spec = NoiseSpec::decay(1.0, 2.0, m);
    std::vector<SampledPath> paths;
    for (int z = -m; z <= m; ++z)
        paths.push_back(sample_brownian(1.0, 1e-3, rng.mode_stream(0, z)));
    std::vector<double> tgrid;
    for (int i = 0; i <= 32; ++i)
        tgrid.push_back(i / 32.0);
    double prev = 1e300;
    std::string seq;
    for (int L : {4, 8, 16, 32}) {
        const double tr = tail_remainder(spec, paths, L, tgrid);
        c.require(tr < prev, "tail not strictly decreasing at L = " +
                                 std::to_string(L));
        prev = tr;
        seq += (seq.empty() ? "" : " > ") + fmt(tr);
    }
    c.require(eigenvalue_decay_check(NoiseSpec::decay(1.0, 2.0, 8), 0.2).ok,
              "decay check rejected p = 2");
    c.require(!eigenvalue_decay_check(NoiseSpec::decay(1.0, 0.6, 8), 0.2).ok,
              "decay check accepted p = 0.6");
    c.note("tail " + seq);
    return c;
}

// ---------------------------------------------------------------------------
// 12. Determinism: identical gaps.csv bytes across repeated runs and across
//    thread counts.
Check criterion12() {
    Check c;
    auto cfg = ladder_base();
    cfg.axis = "eps";
    cfg.values = {0.4, 0.2, 0.1};
    cfg.T = 0.5;
    cfg.replications = 2;
    auto render = [](const AxisResult& r) {
        std::ostringstream os;
        write_gaps_csv(r.next_level, os);
        write_gaps_csv(r.vs_target, os);
        return os.str();
    };
    const auto a = render(Harness(cfg, 1).run_axis("eps"));
    const auto b = render(Harness(cfg, 1).run_axis("eps"));
    const auto d = render(Harness(cfg, 2).run_axis("eps"));
    c.require(a == b, "repeat run differed");
    c.require(a == d, "thread count changed the bytes");
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> only;
    for (int i = 1; i < argc; ++i)
        only.push_back(std::atoi(argv[i]));
    auto wanted = [&](int id) {
        if (only.empty())
            return true;
        for (int o : only)
            if (o == id)
                return true;
        return false;
    };
    const std::size_t threads = 2;

    struct Entry {
        int id;
        const char* name;
        std::function<Check()> fn;
    };
    const std::vector<Entry> entries = {
        {1, "spectral exactness of the heat semigroup", criterion1},
        {2, "forced mass identity", criterion2},
        {3, "linear FP mass conservation and positivity floor", criterion3},
        {4, "mollifier normalization and floor", criterion4},
        {5, "Gamma_M / Xi_eps Lipschitz bounds", criterion5},
        {6, "exact Wasserstein oracle", criterion6},
        {7, "N-convergence rate", [&] { return criterion7(threads); }},
        {8, "eps/M/kappa/m ladder trends", [&] { return criterion8(threads); }},
        {9, "weight freeze and unforced reduction", criterion9},
        {10, "stationary Gibbs oracle", criterion10},
        {11, "tail condition and eigenvalue decay", criterion11},
        {12, "determinism of gaps.csv", criterion12},
    };

    int failures = 0;
    for (const auto& e : entries) {
        if (!wanted(e.id))
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Check c;
        try {
            c = e.fn();
        } catch (const std::exception& ex) {
            c.pass = false;
            c.detail = std::string("exception: ") + ex.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        std::printf("[%s] criterion %2d: %s (%.1f s)%s%s\n",
                    c.pass ? "PASS" : "FAIL", e.id, e.name, secs,
                    c.detail.empty() ? "" : " -- ", c.detail.c_str());
        std::fflush(stdout);
        if (!c.pass)
            ++failures;
    }
    return failures;
}
