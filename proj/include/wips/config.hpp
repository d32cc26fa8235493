#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wips/common.hpp"
#include "wips/field.hpp"
#include "wips/noise.hpp"
#include "wips/particles.hpp"

namespace wips {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok)
        out.push_back(tok);
    return out;
}

inline std::vector<double> parse_number_list(std::string s) {
    for (char& c : s)
        if (c == '[' || c == ']' || c == ',')
            c = ' ';
    std::vector<double> out;
    for (const auto& tok : split_ws(s))
        out.push_back(std::stod(tok));
    return out;
}

}  // namespace detail

/// Full reproducible description of one convergence run; parsed from the
/// flat key-value configuration file with sections
/// [grid] [time] [potentials] [initial] [noise] [sweep] [output].
struct ExperimentConfig {
    // [grid]
    std::size_t n = 256;
    // [time]
    double T = 1.0;
    double dt = 2.5e-4;
    // [potentials] (presets: zero | cos | sin | e<z> | poly:c0,a1,b1,...)
    std::string V = "cos";
    std::string F = "cos";
    std::string q = "e1";
    std::string cutoff_variant = "j";  // j | i_literal
    // [initial]
    std::string zeta0 = "uniform";
    std::string weights = "normal 1 0.5";  // delta <c> | normal <mean> <sd>
    // [noise]
    std::string noise_kind = "single";  // none | single | modes
    std::vector<double> lambda;         // explicit, modes -m..m
    std::vector<double> lambda_decay;   // {c, p, m}
    // [sweep]
    std::string axis = "N";  // N | eps | M | kappa | m | joint
    std::vector<double> values{250, 1000, 4000};
    std::vector<double> joint_eps;
    std::size_t N = 1000;
    double eps = 0.2;
    double M = 10.0;
    int kappa = 64;
    int m = 2;
    std::size_t replications = 4;
    std::size_t N_ref = 10000;
    std::string reference = "pde";  // pde | ensemble:<count>
    int kappa_ref = 1024;
    int m_ref = 64;
    // [output]
    std::vector<std::string> test_functions{"one", "e1", "e-1"};
    std::uint64_t seed = 1;
    std::size_t observable_stride = 4;
    std::vector<double> snapshots;

    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig parse_file(const std::string& path);

    std::string canonical_text() const;
    std::uint64_t hash() const { return fnv1a64(canonical_text()); }
    void validate() const;

    static Field make_field(const std::string& preset, const TorusGrid& g);
    Potentials make_potentials(const TorusGrid& g) const {
        return Potentials(make_field(V, g), make_field(F, g),
                          make_field(q, g));
    }
    InitialLaw make_initial_law(const TorusGrid& g) const;
    NoiseSpec make_noise() const;
    std::vector<TestFunction> make_test_functions() const {
        std::vector<TestFunction> out;
        for (const auto& name : test_functions)
            out.push_back(make_test_function(name));
        return out;
    }
    CutoffVariant make_cutoff_variant() const {
        if (cutoff_variant == "j")
            return CutoffVariant::weight_j;
        if (cutoff_variant == "i_literal")
            return CutoffVariant::weight_i_literal;
        throw DomainError("config: cutoff_variant must be j or i_literal");
    }
};

inline Field ExperimentConfig::make_field(const std::string& preset,
                                          const TorusGrid& g) {
    if (preset == "zero" || preset == "0")
        return Field::zero(g);
    if (preset == "cos")
        return Field::sample(g, [](double x) { return std::cos(x); });
    if (preset == "sin")
        return Field::sample(g, [](double x) { return std::sin(x); });
    if (preset == "uniform")
        return Field::constant(g, 1.0 / two_pi);
    if (!preset.empty() && preset[0] == 'e' &&
        preset.find_first_not_of("e-0123456789") == std::string::npos) {
        const int z = std::stoi(preset.substr(1));
        return Field::basis(g, z);
    }
    if (preset.rfind("poly:", 0) == 0) {
        // c0, a1, b1, a2, b2, ...  ->  c0 + sum a_k cos(kx) + b_k sin(kx)
        const auto c = detail::parse_number_list(preset.substr(5));
        if (c.empty())
            throw DomainError("config: empty poly preset");
        return Field::sample(g, [c](double x) {
            double v = c[0];
            for (std::size_t k = 1; 2 * k - 1 < c.size(); ++k) {
                v += c[2 * k - 1] * std::cos(static_cast<double>(k) * x);
                if (2 * k < c.size())
                    v += c[2 * k] * std::sin(static_cast<double>(k) * x);
            }
            return v;
        });
    }
    throw DomainError("config: unknown field preset '" + preset + "'");
}

inline InitialLaw ExperimentConfig::make_initial_law(const TorusGrid& g) const {
    Field z = make_field(zeta0 == "uniform" ? "uniform" : zeta0, g);
    const double mass = integral(z);
    if (!(mass > 0.0))
        throw DomainError("config: zeta0 must have positive mass");
    z = (1.0 / mass) * z;
    const auto toks = detail::split_ws(weights);
    if (toks.empty())
        throw DomainError("config: empty weights spec");
    WeightMarginal wm;
    if (toks[0] == "delta" && toks.size() == 2)
        wm = WeightMarginal::delta(std::stod(toks[1]));
    else if (toks[0] == "normal" && toks.size() == 3)
        wm = WeightMarginal::normal(std::stod(toks[1]), std::stod(toks[2]));
    else
        throw DomainError("config: weights must be 'delta c' or 'normal mean sd'");
    return InitialLaw(std::move(z), wm);
}

inline NoiseSpec ExperimentConfig::make_noise() const {
    if (!lambda.empty())
        return NoiseSpec::from_lambdas(lambda);
    if (lambda_decay.size() == 3)
        return NoiseSpec::decay(lambda_decay[0], lambda_decay[1],
                                static_cast<int>(lambda_decay[2]));
    throw DomainError("config: noise kind 'modes' needs lambda or lambda_decay");
}

inline ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    auto fail = [](const std::string& msg) { throw DomainError("config: " + msg); };
    while (std::getline(is, line)) {
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos)
            line = line.substr(0, hash_pos);
        line = detail::trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail("malformed section header: " + line);
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail("expected key = value: " + line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        const std::string skey = section + "." + key;

        if (skey == "grid.n") cfg.n = std::stoul(val);
        else if (skey == "time.T") cfg.T = std::stod(val);
        else if (skey == "time.dt") cfg.dt = std::stod(val);
        else if (skey == "potentials.V") cfg.V = val;
        else if (skey == "potentials.F") cfg.F = val;
        else if (skey == "potentials.q") cfg.q = val;
        else if (skey == "potentials.cutoff_variant") cfg.cutoff_variant = val;
        else if (skey == "initial.zeta0") cfg.zeta0 = val;
        else if (skey == "initial.weights") cfg.weights = val;
        else if (skey == "noise.kind") cfg.noise_kind = val;
        else if (skey == "noise.lambda") cfg.lambda = detail::parse_number_list(val);
        else if (skey == "noise.lambda_decay") cfg.lambda_decay = detail::parse_number_list(val);
        else if (skey == "sweep.axis") cfg.axis = val;
        else if (skey == "sweep.values") cfg.values = detail::parse_number_list(val);
        else if (skey == "sweep.joint_eps") cfg.joint_eps = detail::parse_number_list(val);
        else if (skey == "sweep.N") cfg.N = std::stoul(val);
        else if (skey == "sweep.eps") cfg.eps = std::stod(val);
        else if (skey == "sweep.M") cfg.M = std::stod(val);
        else if (skey == "sweep.kappa") cfg.kappa = std::stoi(val);
        else if (skey == "sweep.m") cfg.m = std::stoi(val);
        else if (skey == "sweep.replications") cfg.replications = std::stoul(val);
        else if (skey == "sweep.N_ref") cfg.N_ref = std::stoul(val);
        else if (skey == "sweep.reference") cfg.reference = val;
        else if (skey == "sweep.kappa_ref") cfg.kappa_ref = std::stoi(val);
        else if (skey == "sweep.m_ref") cfg.m_ref = std::stoi(val);
        else if (skey == "output.test_functions") cfg.test_functions = detail::split_ws(val);
        else if (skey == "output.seed") cfg.seed = std::stoull(val);
        else if (skey == "output.observable_stride") cfg.observable_stride = std::stoul(val);
        else if (skey == "output.snapshots") cfg.snapshots = detail::parse_number_list(val);
        else fail("unknown key '" + key + "' in section [" + section + "]");
    }
    return cfg;
}

inline ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DomainError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    // manifests embed their config below a [config] marker
    const auto mark = text.find("\n[config]\n");
    if (text.rfind("wips_manifest_version", 0) == 0 && mark != std::string::npos)
        text = text.substr(mark + 10);
    return parse(text);
}

inline std::string ExperimentConfig::canonical_text() const {
    std::ostringstream os;
    auto num = [](double v) { return format_double(v); };
    auto list = [&](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? " " : "") + num(v[i]);
        return s;
    };
    os << "[grid]\n"
       << "n = " << n << "\n"
       << "[time]\n"
       << "T = " << num(T) << "\n"
       << "dt = " << num(dt) << "\n"
       << "[potentials]\n"
       << "V = " << V << "\n"
       << "F = " << F << "\n"
       << "q = " << q << "\n"
       << "cutoff_variant = " << cutoff_variant << "\n"
       << "[initial]\n"
       << "zeta0 = " << zeta0 << "\n"
       << "weights = " << weights << "\n"
       << "[noise]\n"
       << "kind = " << noise_kind << "\n";
    if (!lambda.empty())
        os << "lambda = " << list(lambda) << "\n";
    if (!lambda_decay.empty())
        os << "lambda_decay = " << list(lambda_decay) << "\n";
    os << "[sweep]\n"
       << "axis = " << axis << "\n"
       << "values = " << list(values) << "\n";
    if (!joint_eps.empty())
        os << "joint_eps = " << list(joint_eps) << "\n";
    os << "N = " << N << "\n"
       << "eps = " << num(eps) << "\n"
       << "M = " << num(M) << "\n"
       << "kappa = " << kappa << "\n"
       << "m = " << m << "\n"
       << "replications = " << replications << "\n"
       << "N_ref = " << N_ref << "\n"
       << "reference = " << reference << "\n"
       << "kappa_ref = " << kappa_ref << "\n"
       << "m_ref = " << m_ref << "\n"
       << "[output]\n"
       << "test_functions =";
    for (const auto& f : test_functions)
        os << " " << f;
    os << "\n"
       << "seed = " << seed << "\n"
       << "observable_stride = " << observable_stride << "\n";
    if (!snapshots.empty())
        os << "snapshots = " << list(snapshots) << "\n";
    return os.str();
}

inline void ExperimentConfig::validate() const {
    TorusGrid g(n);  // throws when n is invalid
    if (!(dt > 0.0) || !(dt <= T))
        throw DomainError("config: need 0 < dt <= T");
    if (!(eps > 0.0))
        throw DomainError("config: eps must be positive");
    if (!(M > 0.0))
        throw DomainError("config: M must be positive");
    if (kappa < 1 || kappa_ref < 2)
        throw DomainError("config: kappa >= 1 and kappa_ref >= 2 required");
    if (m < 0 || m_ref < 1)
        throw DomainError("config: m >= 0 and m_ref >= 1 required");
    if (values.empty())
        throw DomainError("config: sweep values must be non-empty");
    if (replications < 1)
        throw DomainError("config: replications >= 1");
    if (axis == "joint" && joint_eps.size() != values.size())
        throw DomainError("config: joint sweep needs matching joint_eps list");
    static const char* axes[] = {"N", "eps", "M", "kappa", "m", "joint"};
    bool ok = false;
    for (const char* a : axes)
        ok = ok || axis == a;
    if (!ok)
        throw DomainError("config: unknown sweep axis " + axis);
    if (noise_kind != "none" && noise_kind != "single" && noise_kind != "modes")
        throw DomainError("config: noise kind must be none|single|modes");
    if (noise_kind == "modes")
        make_noise();  // throws when inconsistent
    if (reference != "pde" && reference.rfind("ensemble:", 0) != 0)
        throw DomainError("config: reference must be pde or ensemble:<count>");
    // downstream constructions must succeed
    const auto pot = make_potentials(g);
    make_initial_law(g);
    make_test_functions();
    make_cutoff_variant();
    // nonlinear CFL precheck with a coarse drift estimate
    const double drift_bound =
        pot.Vp.max_abs() + std::max(M, 1.0) * pot.Fp.max_abs();
    if (dt > g.spacing() / std::max(drift_bound, 1e-12))
        throw DomainError("config: dt violates the stability precheck");
}

}  // namespace wips
