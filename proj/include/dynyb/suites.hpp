// Named verification suites: model construction from a flat configuration
// and one runner per suite. Shared by the command-line driver and the
// acceptance tests.

#ifndef DYNYB_SUITES_HPP
#define DYNYB_SUITES_HPP

#include <cctype>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "intertwine.hpp"
#include "json_io.hpp"
#include "report.hpp"
#include "rmodels.hpp"
#include "twist.hpp"

namespace dynyb {

struct SuiteConfig {
    std::string suite;
    std::string model = "sos";
    std::string pair;
    std::string cells = "ad";
    std::string window = "auto";  // restricted | unrestricted | auto
    std::string input;            // JSON file for drinfeld / dyn-twist / cell files
    std::string object;           // export: object id
    double tol = 1e-9;
    int samples = 50;
    std::uint64_t seed = 42;
    cplx tau{0.0, 1.2};
    cplx nome = 0.1;
    cplx lambda = 0.1;
    int level = 0;  // 0 picks the model default
    cplx shift = 0.39;
    cplx z{0.31, 0.0};
    std::vector<int> trace_sizes{2, 4};

    void validate() const {
        if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
        if (samples < 1) throw std::invalid_argument("sample count must be at least 1");
    }
};

inline const std::vector<std::string>& model_names() {
    static const std::vector<std::string> m{"8v", "sos", "sym-sos", "ell-a", "trig-a"};
    return m;
}

inline SosParams sos_params(const SuiteConfig& c) {
    SosParams P;
    P.e = EllipticParams::make(c.nome, c.lambda);
    return P;
}

// ell-a: L = 6, unrestricted window by default. trig-a: L = 7 (g = 12),
// restricted chain by default.
inline AParams a_params(const SuiteConfig& c) {
    AParams P;
    P.theta.tau = c.tau;
    P.b = c.shift;
    if (c.model == "ell-a") {
        P.theta.L = c.level ? c.level : 6;
        P.restricted = c.window == "restricted";
    } else {
        P.theta.L = c.level ? c.level : 7;
        P.restricted = c.window != "unrestricted";
    }
    return P;
}

inline SpectralOperator make_model(const SuiteConfig& c) {
    if (c.model == "8v") return build_r8v(EllipticParams::make(c.nome, c.lambda));
    if (c.model == "sos") return build_rsos(sos_params(c));
    if (c.model == "sym-sos") return build_rsym_sos(sos_params(c));
    if (c.model == "ell-a") return build_elliptic_A(a_params(c));
    if (c.model == "trig-a") return build_trig_A(a_params(c));
    throw std::invalid_argument("unknown model " + c.model);
}

namespace detail {
inline Report start(const SuiteConfig& c, const std::string& name) {
    c.validate();
    Report r;
    r.suite = name;
    return r;
}

struct IntertwinerPair {
    Intertwiner C;
    SpectralOperator R1, R2;
};

// "8v-sos": Baxter's C; "sos-sym-sos": C-hat; "8v-sym-sos": C-hat after C.
inline IntertwinerPair make_pair(const SuiteConfig& c) {
    const SosParams P = sos_params(c);
    auto R8 = build_r8v(P.e);
    auto S = build_rsos(P);
    auto Y = build_rsym_sos(P);
    if (c.pair == "8v-sos" || c.pair.empty()) return {build_baxter_C(P, R8.leg, S.leg), R8, S};
    if (c.pair == "sos-sym-sos") return {build_hatC(P, S.leg, Y.leg), S, Y};
    if (c.pair == "8v-sym-sos") return {compose_intertwiners(build_baxter_C(P, R8.leg, S.leg), build_hatC(P, S.leg, Y.leg)), R8, Y};
    throw std::invalid_argument("unknown pair " + c.pair);
}

struct CellSetup {
    CellData cells;
    SpectralOperator R1;
};

// "ad": A_{2L-3} -> D_L over elliptic A (L = --level, default 4).
// "e6": A_11 -> E_6 over trigonometric A with g = 12.
// Anything else is a cell-data JSON file; R1 is --model (ell-a or trig-a)
// on the file's A graph.
inline CellSetup make_cells(const SuiteConfig& c) {
    if (c.cells == "ad") {
        AParams P;
        P.theta.tau = c.tau;
        P.theta.L = c.level ? c.level : 4;
        auto R = build_elliptic_A(P);
        return {build_AD_cells(P.theta.L, R.leg), R};
    }
    if (c.cells == "e6") {
        AParams P;
        P.theta.L = 7;
        auto R = build_trig_A(P);
        return {build_E6_cells(R.leg), R};
    }
    CellData cd = cells_from_json(read_json_file(c.cells));
    const int n = int(cd.A->num_objects());
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("cell file: A graph must be a chain with an odd number >= 3 of nodes");
    AParams P;
    P.theta.tau = c.tau;
    P.theta.L = (n + 3) / 2;
    auto R = c.model == "trig-a" ? build_trig_A(P, cd.A) : build_elliptic_A(P, cd.A);
    cd.legA = R.leg;
    return {cd, R};
}

inline std::string signs_text(const std::vector<int>& s) {
    std::string t;
    for (int x : s) t += x > 0 ? '+' : '-';
    return t;
}

inline std::string deviation_text(double d) {
    std::ostringstream o;
    o.precision(6);
    o << std::scientific << d;
    return o.str();
}

inline Mat flip_matrix(int d) {
    Mat P = Mat::Zero(d * d, d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) P(i * d + j, j * d + i) = 1.0;
    return P;
}
}  // namespace detail

// --- model suites -----------------------------------------------------------

inline Report run_dybe(const SuiteConfig& c, const std::string& name = "dybe") {
    Report rep = detail::start(c, name);
    auto R = make_model(c);
    Sampler s(c.seed);
    sweep(rep, R.name + ":" + name, c.samples, c.tol, s, [&](Sampler& g) {
        const cplx z = g.spectral(), w = g.spectral();
        return dybe_residual(R, z, w);
    });
    return rep;
}

inline Report run_inversion(const SuiteConfig& c) {
    Report rep = detail::start(c, "inversion");
    auto R = make_model(c);
    Sampler s(c.seed);
    sweep(rep, R.name + ":inversion", c.samples, c.tol, s, [&](Sampler& g) { return inversion_residual(R, g.spectral()); });
    return rep;
}

inline Report run_symmetric(const SuiteConfig& c) {
    Report rep = detail::start(c, "symmetric");
    auto R = make_model(c);
    Sampler s(c.seed);
    double worst = 0.0;
    for (int i = 0; i < c.samples; ++i) {
        worst = std::max(worst, symmetry_defect(R, s.spectral()));
        ++rep.samples;
    }
    rep.add(make_check(R.name + ":symmetric", worst, std::numeric_limits<double>::denorm_min()));
    return rep;
}

// --- intertwiner suites -------------------------------------------------------

inline Report run_rcc(const SuiteConfig& c) {
    Report rep = detail::start(c, "rcc");
    auto p = detail::make_pair(c);
    Sampler s(c.seed);
    sweep(rep, p.C.name + ":rcc", c.samples, c.tol, s, [&](Sampler& g) {
        const cplx z = g.spectral(), w = g.spectral();
        return rcc_residual(p.C, p.R1, p.R2, z, w);
    });
    return rep;
}

// Transposed intertwiner of a pair whose operators are both symmetric.
inline Report run_rdd(const SuiteConfig& c) {
    SuiteConfig cc = c;
    if (cc.pair.empty()) cc.pair = "8v-sym-sos";
    Report rep = detail::start(cc, "rdd");
    auto p = detail::make_pair(cc);
    for (auto* R : {&p.R1, &p.R2}) {
        const double d = symmetry_defect(*R, 0.37);
        if (d != 0.0) rep.notes.push_back(R->name + " is not symmetric; the transposed relation is not expected");
    }
    auto T = transpose_intertwiner(p.C);
    Sampler s(cc.seed);
    sweep(rep, T.name + ":rdd", cc.samples, cc.tol, s, [&](Sampler& g) {
        const cplx z = g.spectral(), w = g.spectral();
        return rdd_residual(T, p.R1, p.R2, z, w);
    });
    return rep;
}

// With --pair: the trace relation of the pair's intertwiner. Without: the
// commuting transfer matrices of --model.
inline Report run_trace(const SuiteConfig& c) {
    Report rep = detail::start(c, "trace");
    Sampler s(c.seed);
    if (c.pair.empty()) {
        auto R = make_model(c);
        for (int N : c.trace_sizes)
            sweep(rep, R.name + ":commuting_N" + std::to_string(N), c.samples, c.tol, s, [&](Sampler& g) {
                const cplx z = g.spectral(), zp = g.spectral();
                return commuting_transfer_residual(R, z, zp, std::size_t(N));
            });
        return rep;
    }
    auto p = detail::make_pair(c);
    for (int N : c.trace_sizes)
        sweep(rep, p.C.name + ":trace_N" + std::to_string(N), c.samples, c.tol, s, [&](Sampler& g) {
            const cplx u = g.spectral(), zp = g.spectral();
            return trace_relation_residual(p.C, p.R1, p.R2, u, zp, std::size_t(N));
        });
    return rep;
}

inline Report run_weight_zero(const SuiteConfig& c) {
    Report rep = detail::start(c, "weight-zero");
    Sampler s(c.seed);
    Intertwiner C;
    SpectralOperator R1, R2;
    if (!c.pair.empty()) {
        auto p = detail::make_pair(c);
        C = p.C;
        R1 = p.R1;
        R2 = p.R2;
    } else {
        auto cs = detail::make_cells(c);
        CellData cd = cs.cells;
        if (!cd.flagged().empty()) cd = resolve_signs(cd, cs.R1, c.z).resolved;
        C = cd.intertwiner();
        R1 = cs.R1;
        R2 = cell_twist_operator(cd, cs.R1);
    }
    double rel = 0.0, inv = 0.0;
    bool dims = true;
    for (int i = 0; i < c.samples; ++i) {
        const cplx z = s.spectral(), w = s.spectral();
        auto r = weight_zero_residual(C, R1, R2, z, w);
        rel = std::max(rel, r.relation);
        inv = std::max(inv, r.right_inverse);
        dims = dims && r.dims_compatible;
        ++rep.samples;
    }
    rep.add(C.name + ":relation", rel, c.tol);
    rep.add(C.name + ":right_inverse", inv, c.tol);
    rep.add(C.name + ":target_fiber_dims", dims ? 0.0 : 1.0, 0.5);
    return rep;
}

// --- twist suites ---------------------------------------------------------------

// Gauge twist by seeded random scalars on --model, checked as a unique
// connecting-system twist.
inline Report run_twist_unique(const SuiteConfig& c) {
    Report rep = detail::start(c, "twist-unique");
    auto R = make_model(c);
    Sampler s(c.seed);
    std::vector<cplx> scal(R.leg->size());
    for (auto& x : scal) x = cplx(s.uniform(0.5, 2.0), s.uniform(-0.5, 0.5));
    auto cd = gauge_cells(R.leg, [&](std::size_t a) { return scal[a]; });
    auto sys = default_system(cd);
    auto j = fuse_power(cd.backward(), 2), q = fuse_power(cd.backward(), 3);
    Report worst;
    for (int i = 0; i < c.samples; ++i) {
        const cplx z = s.spectral(), w = s.spectral();
        auto r = check_unique_twist(j, q, R, sys, z, w, c.tol);
        if (worst.checks.empty()) worst = r;
        for (std::size_t k = 0; k < r.checks.size(); ++k)
            if (r.checks[k].residual > worst.checks[k].residual) worst.checks[k] = r.checks[k];
        ++rep.samples;
    }
    rep.merge(worst);
    return rep;
}

inline Report run_twist_quasi(const SuiteConfig& c) {
    Report rep = detail::start(c, "twist-quasi");
    auto cs = detail::make_cells(c);
    CellData cd = cs.cells;
    if (!cd.flagged().empty()) {
        auto search = resolve_signs(cd, cs.R1, c.z);
        cd = search.resolved;
        rep.notes.push_back("signs " + detail::signs_text(search.best) + " deviation " + detail::deviation_text(search.best_deviation));
    }
    auto sys = default_system(cd);
    Sampler s(c.seed);
    const int n = std::min(c.samples, 5);
    Report worst;
    for (int i = 0; i < n; ++i) {
        const cplx z = s.spectral(), w = s.spectral();
        auto r = check_quasi_unique_twist(cd, cs.R1, sys, z, w, c.tol);
        if (worst.checks.empty()) worst = r;
        for (std::size_t k = 0; k < r.checks.size(); ++k)
            if (r.checks[k].residual > worst.checks[k].residual) worst.checks[k] = r.checks[k];
        ++rep.samples;
    }
    rep.merge(worst);
    return rep;
}

// Cell-twist conditions at --z (after sign resolution when squares are
// flagged), dYBE of the twisted operator, and the weight-zero relation of the
// induced intertwiner.
inline Report run_cell(const SuiteConfig& c) {
    Report rep = detail::start(c, "cell");
    auto cs = detail::make_cells(c);
    CellData cd = cs.cells;
    rep.notes.push_back("cells: " + cd.provenance);
    if (!cd.flagged().empty()) {
        auto search = resolve_signs(cd, cs.R1, c.z);
        for (auto& [signs, dev] : search.table) rep.notes.push_back("assignment " + detail::signs_text(signs) + " deviation " + detail::deviation_text(dev));
        rep.notes.push_back(std::string(search.unique ? "unique" : "ambiguous") + " minimizer " + detail::signs_text(search.best));
        rep.add("sign_search_unique", search.unique ? 0.0 : 1.0, 0.5);
        cd = search.resolved;
    }
    auto twist = check_cell_twist(cd, cs.R1, c.z, c.tol);
    rep.merge(twist);
    auto R2 = cell_twist_operator(cd, cs.R1);
    Sampler s(c.seed);
    sweep(rep, "twisted_dybe", c.samples, c.tol, s, [&](Sampler& g) {
        const cplx z = g.spectral(), w = g.spectral();
        return dybe_residual(R2, z, w);
    });
    if (twist.pass()) {
        auto C = cd.intertwiner();
        double rel = 0.0;
        for (int i = 0; i < std::min(c.samples, 5); ++i) {
            const cplx z = s.spectral(), w = s.spectral();
            rel = std::max(rel, weight_zero_residual(C, cs.R1, R2, z, w).relation);
        }
        rep.add("implied_weight_zero", rel, c.tol);
    }
    return rep;
}

// Twisted operator of a cell system as a standalone check on its dYBE under
// a per-arrow gauge.
inline Report run_gauge(const SuiteConfig& c) {
    Report rep = detail::start(c, "gauge");
    auto R = make_model(c);
    Sampler s(c.seed);
    std::vector<cplx> scal(R.leg->size());
    for (auto& x : scal) x = cplx(s.uniform(0.5, 2.0), s.uniform(-0.5, 0.5));
    auto G = gauge_transform([&](std::size_t a) { return scal[a]; }, R);
    sweep(rep, G.name + ":dybe", c.samples, c.tol, s, [&](Sampler& g) {
        const cplx z = g.spectral(), w = g.spectral();
        return dybe_residual(G, z, w);
    });
    return rep;
}

// --- dense twists -------------------------------------------------------------------

// R = flip on C^2 (x) C^2, J = A (x) B and the matching triple product
// Q = A^-1 (x) B^-1 (x) B^-1 A B^-1.
inline std::pair<Mat, StaticTwistPair> factorized_twist_example() {
    Mat A(2, 2), B(2, 2);
    A << 1.0, 0.3, 0.2, 1.5;
    B << 2.0, 0.1, -0.4, 1.0;
    const Mat Bi = B.inverse();
    return {detail::flip_matrix(2), {kron(A, B), kron(kron(A.inverse(), Bi), Bi * A * Bi)}};
}

// A seeded random J with Q = (J (x) 1)^-1: not a twist of the flip.
inline std::pair<Mat, StaticTwistPair> nontwist_example(std::uint64_t seed) {
    Sampler s(seed);
    Mat J(4, 4);
    for (Eigen::Index i = 0; i < 16; ++i) J(i / 4, i % 4) = cplx(s.uniform(-1, 1), s.uniform(-1, 1));
    J += 2.0 * Mat::Identity(4, 4);
    Mat Q = kron(J, Mat::Identity(2, 2)).inverse();
    return {detail::flip_matrix(2), {J, Q}};
}

inline Report run_drinfeld(const SuiteConfig& c) {
    std::pair<Mat, StaticTwistPair> in;
    if (c.input.empty() || c.input == "factorized")
        in = factorized_twist_example();
    else if (c.input == "nontwist")
        in = nontwist_example(c.seed);
    else
        in = static_twist_from_json(read_json_file(c.input));
    c.validate();
    return check_drinfeld(in.first, in.second, c.tol);
}

// Diagonal twist of the flip on C^2 with weights (+1, -1):
//   J(l)(e_i (x) e_j) = eta(l - w_i) e_i (x) e_j,
//   Q(l)(e_i (x) e_j (x) e_k) = e_i (x) e_j (x) e_k / (eta(l - w_i) eta(l - w_i - w_j)),
// so that R_J(l) swaps with the factor eta(l - w_i) / eta(l - w_j).
inline DynamicalTwistData dynamical_twist_example(int lmin = -6, int lmax = 6) {
    DynamicalTwistData t;
    t.dim = 2;
    t.weights = {1, -1};
    t.R = detail::flip_matrix(2);
    t.lmin = lmin;
    t.lmax = lmax;
    auto eta = [](int l) { return cplx(1.5 + 0.2 * l, 0.1 * l * l); };
    for (int l = lmin; l <= lmax; ++l) {
        Mat J = Mat::Zero(4, 4), Q = Mat::Zero(8, 8);
        for (int i = 0; i < 2; ++i) {
            const int wi = t.weights[i];
            for (int j = 0; j < 2; ++j) {
                J(2 * i + j, 2 * i + j) = eta(l - wi);
                for (int k = 0; k < 2; ++k) Q(4 * i + 2 * j + k, 4 * i + 2 * j + k) = 1.0 / (eta(l - wi) * eta(l - wi - t.weights[j]));
            }
        }
        t.J[l] = J;
        t.Q[l] = Q;
    }
    return t;
}

inline Report run_dyn_twist(const SuiteConfig& c) {
    c.validate();
    DynamicalTwistData t = c.input.empty() || c.input == "example" ? dynamical_twist_example() : dynamical_twist_from_json(read_json_file(c.input));
    return check_dynamical_twist(t, c.tol);
}

// --- command-line helpers ---------------------------------------------------------

// "1.5", "0.2i", "0.3+0.1i", "-1e-3-2i", "i"
inline std::optional<cplx> parse_complex(const std::string& s) {
    std::string t;
    for (char ch : s)
        if (!std::isspace(static_cast<unsigned char>(ch))) t += ch;
    if (t.empty()) return std::nullopt;
    auto num = [](const std::string& x, double& v) {
        if (x.empty() || x == "+") return v = 1.0, true;
        if (x == "-") return v = -1.0, true;
        try {
            std::size_t used = 0;
            v = std::stod(x, &used);
            return used == x.size();
        } catch (const std::exception&) {
            return false;
        }
    };
    double re = 0.0, im = 0.0;
    if (t.back() != 'i') {
        if (!num(t, re) || t == "+" || t == "-") return std::nullopt;
        return cplx(re, 0.0);
    }
    t.pop_back();
    std::size_t split = std::string::npos;
    for (std::size_t k = t.size(); k-- > 1;)
        if ((t[k] == '+' || t[k] == '-') && t[k - 1] != 'e' && t[k - 1] != 'E') {
            split = k;
            break;
        }
    if (split == std::string::npos) {
        if (!num(t, im)) return std::nullopt;
        return cplx(0.0, im);
    }
    const std::string a = t.substr(0, split), b = t.substr(split);
    if (!num(a, re) || a == "+" || a == "-" || !num(b, im)) return std::nullopt;
    return cplx(re, im);
}

// --- dispatch -----------------------------------------------------------------------

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> s{"dybe",         "ybe",         "inversion", "symmetric", "rcc",      "rdd",
                                            "trace",        "weight-zero", "twist-unique", "twist-quasi", "cell", "gauge",
                                            "drinfeld",     "dyn-twist"};
    return s;
}

inline Report run_suite(const SuiteConfig& c) {
    Stopwatch sw;
    Report r;
    if (c.suite == "dybe") r = run_dybe(c);
    else if (c.suite == "ybe") r = run_dybe(c, "ybe");
    else if (c.suite == "inversion") r = run_inversion(c);
    else if (c.suite == "symmetric") r = run_symmetric(c);
    else if (c.suite == "rcc") r = run_rcc(c);
    else if (c.suite == "rdd") r = run_rdd(c);
    else if (c.suite == "trace") r = run_trace(c);
    else if (c.suite == "weight-zero") r = run_weight_zero(c);
    else if (c.suite == "twist-unique") r = run_twist_unique(c);
    else if (c.suite == "twist-quasi") r = run_twist_quasi(c);
    else if (c.suite == "cell") r = run_cell(c);
    else if (c.suite == "gauge") r = run_gauge(c);
    else if (c.suite == "drinfeld") r = run_drinfeld(c);
    else if (c.suite == "dyn-twist") r = run_dyn_twist(c);
    else throw std::invalid_argument("unknown suite " + c.suite);
    r.wall_time = sw.seconds();
    return r;
}

// Source-fiber matrix of --model at object --object and spectral --z.
inline json export_fiber(const SuiteConfig& c) {
    auto R = make_model(c);
    const Groupoid& G = R.groupoid();
    const std::size_t o = c.object.empty() ? G.num_objects() / 2 : G.object(c.object);
    Basis b = Basis::source_fiber({R.leg, R.leg}, o);
    DenseMap X = apply(R(c.z), 0, DenseMap::identity(b));
    json j = fiber_to_json(X);
    json out;
    out["model"] = R.name;
    out["object"] = G.object_id(o);
    out["z"] = to_json(c.z);
    out["rows"] = j["rows"];
    out["cols"] = j["cols"];
    out["mat"] = j["mat"];
    return out;
}

// H, Theta, h at (nome, lambda) and theta, [z] at (tau, level), all at --z.
inline json theta_eval(const SuiteConfig& c) {
    const EllipticParams e = EllipticParams::make(c.nome, c.lambda);
    ThetaParams t;
    t.tau = c.tau;
    t.L = c.level ? c.level : 4;
    json j;
    j["z"] = to_json(c.z);
    j["H"] = to_json(jacobi_H(c.z, e));
    j["Theta"] = to_json(jacobi_Theta(c.z, e));
    j["h"] = to_json(h(c.z, e));
    j["theta"] = to_json(theta_odd(c.z, t.tau));
    j["bracket"] = to_json(bracket(c.z, t));
    j["trig_bracket"] = to_json(trig_bracket(c.z, t.period()));
    return j;
}

}  // namespace dynyb

#endif
