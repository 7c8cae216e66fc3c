// Spectral Yang-Baxter operators (eight-vertex, SOS, symmetric SOS,
// elliptic and trigonometric A) and the equation checkers.
//
// Face-type operators act on two-step paths a -> a+-1 -> ... . On the source
// fiber of a the basis order is (+,+), (+,-), (-,+), (-,-) and a 4x4 matrix
// M is read as M[out][in].

#ifndef DYNYB_RMODELS_HPP
#define DYNYB_RMODELS_HPP

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "elliptic.hpp"
#include "graded.hpp"
#include "groupoid.hpp"
#include "report.hpp"

namespace dynyb {

struct SpectralOperator {
    std::string name;
    LegPtr leg;
    std::function<BlockOperator(cplx)> eval;
    // Base objects whose three-step fibers lie inside a truncated window.
    int margin = 0;

    BlockOperator operator()(cplx z) const { return eval(z); }
    const Groupoid& groupoid() const { return *leg->groupoid; }
    std::vector<std::size_t> interior_objects(int need) const {
        std::vector<std::size_t> r;
        for (std::size_t o = 0; o < groupoid().num_objects(); ++o)
            if (groupoid().window_depth(o) >= need) r.push_back(o);
        return r;
    }
};

// Weights of a face operator at base value a. Naming: `pm_pm` is the
// coefficient of (+,-) -> (+,-), `pm_mp` of (+,-) -> (-,+), etc.
struct FaceWeights {
    cplx pp = 1.0, mm = 1.0, pm_pm = 1.0, mp_mp = 1.0, pm_mp = 0.0, mp_pm = 0.0;
};

namespace detail {
inline int step_dir(const Groupoid& g, std::size_t a) {
    const double d = (g.object_value(g.tgt(a)) - g.object_value(g.src(a))).real();
    return d > 0 ? 1 : -1;
}

// Generator from o in direction dir, or npos.
inline std::size_t step_from(const Groupoid& g, const LegPtr& leg, std::size_t o, int dir) {
    for (auto a : leg->out[o])
        if (g.arrow(a).generator && step_dir(g, a) == dir) return a;
    return npos;
}

inline BlockOperator face_operator(const LegPtr& leg, const std::function<FaceWeights(std::size_t)>& weights) {
    const Groupoid& g = *leg->groupoid;
    BlockOperator op({leg, leg}, {leg, leg});
    for (std::size_t o = 0; o < g.num_objects(); ++o) {
        const auto up = step_from(g, leg, o, 1), dn = step_from(g, leg, o, -1);
        std::optional<FaceWeights> W;
        auto w = [&]() -> const FaceWeights& {
            if (!W) W = weights(o);
            return *W;
        };
        auto second = [&](std::size_t a, int dir) { return step_from(g, leg, g.tgt(a), dir); };
        if (up != npos) {
            if (auto s = second(up, 1); s != npos) op.add({std::uint32_t(up), std::uint32_t(s)}, {std::uint32_t(up), std::uint32_t(s)}, w().pp);
            if (auto s = second(up, -1); s != npos) {
                Path in{std::uint32_t(up), std::uint32_t(s)};
                op.add(in, in, w().pm_pm);
                if (dn != npos)
                    if (auto t = second(dn, 1); t != npos) op.add(in, {std::uint32_t(dn), std::uint32_t(t)}, w().pm_mp);
            }
        }
        if (dn != npos) {
            if (auto s = second(dn, -1); s != npos) op.add({std::uint32_t(dn), std::uint32_t(s)}, {std::uint32_t(dn), std::uint32_t(s)}, w().mm);
            if (auto s = second(dn, 1); s != npos) {
                Path in{std::uint32_t(dn), std::uint32_t(s)};
                op.add(in, in, w().mp_mp);
                if (up != npos)
                    if (auto t = second(up, -1); t != npos) op.add(in, {std::uint32_t(up), std::uint32_t(t)}, w().mp_pm);
            }
        }
    }
    return op;
}
}  // namespace detail

// --- eight-vertex -----------------------------------------------------------

// Z/2 on one object; V_+ and V_- one-dimensional. Entries (basis ++,+-,-+,--):
//   n(z) [[a,0,0,d],[0,c,b,0],[0,b,c,0],[d,0,0,a]],
//   a = Theta(l z) H(l(z+1)), b = H(l z) Theta(l(z+1)),
//   c = H(l) Theta(l z) Theta(l(z+1)) / Theta(l), d = H(l) H(l z) H(l(z+1)) / Theta(l),
//   n(z) = h(1) / (h(z+1) Theta(0) H(l)).
inline SpectralOperator build_r8v(const EllipticParams& e) {
    auto g = std::make_shared<const Groupoid>(Groupoid::z2("v"));
    auto leg = full_leg(g, "V8v");
    SpectralOperator R{"8v", leg, {}, 0};
    R.eval = [e, leg](cplx z) {
        const cplx l = e.lambda;
        const cplx Hl = jacobi_H(l, e), Tl = jacobi_Theta(l, e);
        const cplx Hz = jacobi_H(l * z, e), Tz = jacobi_Theta(l * z, e);
        const cplx Hz1 = jacobi_H(l * (z + 1.0), e), Tz1 = jacobi_Theta(l * (z + 1.0), e);
        const cplx h1 = h(1.0, e), hz1 = h(z + 1.0, e);
        guard(Tl, std::abs(Hl), "Theta(lambda)");
        guard(hz1, std::abs(h1), "h(z+1)");
        const cplx den = guard(jacobi_Theta(0.0, e) * Hl, 1.0, "Theta(0) H(lambda)");
        const cplx n = h1 / (hz1 * den);
        const cplx a = n * Tz * Hz1, b = n * Hz * Tz1, c = n * Hl * Tz * Tz1 / Tl, d = n * Hl * Hz * Hz1 / Tl;
        const std::array<std::array<cplx, 4>, 4> M{{{a, 0, 0, d}, {0, c, b, 0}, {0, b, c, 0}, {d, 0, 0, a}}};
        BlockOperator op({leg, leg}, {leg, leg});
        for (std::uint32_t in = 0; in < 4; ++in)
            for (std::uint32_t out = 0; out < 4; ++out)
                if (M[out][in] != cplx(0.0)) op.add({in / 2, in % 2}, {out / 2, out % 2}, M[out][in]);
        return op;
    };
    return R;
}

// --- SOS family -------------------------------------------------------------

struct SosParams {
    EllipticParams e = EllipticParams::make(0.1, 0.1);
    double s_plus = 20.3, s_minus = 19.5;
    int kmin = -8, kmax = 8;

    // xi = (s+ + s-)/2 - K/lambda
    cplx xi() const { return 0.5 * (s_plus + s_minus) - e.K / e.lambda; }
    GroupoidPtr window() const { return std::make_shared<const Groupoid>(Groupoid::action_window(xi(), kmin, kmax)); }
};

// 4x4 on the source fiber of a:
//   1 on (+,+) and (-,-);
//   (+,-)->(+,-): h(a-z)h(1)/(h(a)h(z+1)),  (-,+)->(-,+): h(a+z)h(1)/(h(a)h(z+1)),
//   (-,+)->(+,-): h(a+1)h(z)/(h(a)h(z+1)),  (+,-)->(-,+): h(a-1)h(z)/(h(a)h(z+1)).
inline SpectralOperator build_rsos(const SosParams& P, GroupoidPtr g = nullptr) {
    if (!g) g = P.window();
    auto leg = steps_leg(g, "Vsos");
    SpectralOperator R{"sos", leg, {}, 3};
    const auto e = P.e;
    R.eval = [e, leg](cplx z) {
        const cplx h1 = h(1.0, e), hz = h(z, e), hz1 = h(z + 1.0, e);
        guard(hz1, std::abs(h1), "h(z+1)");
        const Groupoid& G = *leg->groupoid;
        return detail::face_operator(leg, [&](std::size_t o) {
            const cplx a = G.object_value(o);
            const cplx ha = h(a, e);
            guard(ha, std::abs(h1), "h(a)");
            const cplx den = ha * hz1;
            FaceWeights w;
            w.pm_pm = h(a - z, e) * h1 / den;
            w.mp_mp = h(a + z, e) * h1 / den;
            w.mp_pm = h(a + 1.0, e) * hz / den;
            w.pm_mp = h(a - 1.0, e) * hz / den;
            return w;
        });
    };
    return R;
}

// As build_rsos with both off-diagonals sqrt(h(a+1)h(a-1)) h(z)/(h(a)h(z+1)).
inline SpectralOperator build_rsym_sos(const SosParams& P, GroupoidPtr g = nullptr) {
    if (!g) g = P.window();
    auto leg = steps_leg(g, "Vsym");
    SpectralOperator R{"sym-sos", leg, {}, 3};
    const auto e = P.e;
    R.eval = [e, leg](cplx z) {
        const cplx h1 = h(1.0, e), hz = h(z, e), hz1 = h(z + 1.0, e);
        guard(hz1, std::abs(h1), "h(z+1)");
        const Groupoid& G = *leg->groupoid;
        return detail::face_operator(leg, [&](std::size_t o) {
            const cplx a = G.object_value(o);
            const cplx ha = h(a, e);
            guard(ha, std::abs(h1), "h(a)");
            const cplx den = ha * hz1;
            FaceWeights w;
            w.pm_pm = h(a - z, e) * h1 / den;
            w.mp_mp = h(a + z, e) * h1 / den;
            const cplx off = std::sqrt(h(a + 1.0, e) * h(a - 1.0, e)) * hz / den;
            w.mp_pm = off;
            w.pm_mp = off;
            return w;
        });
    };
    return R;
}

// --- A-type face models -----------------------------------------------------

struct AParams {
    ThetaParams theta{};  // tau and level L
    bool restricted = true;
    cplx b = 0.39;        // shift of the unrestricted window
    int N = 8;            // unrestricted window radius
    int g = 0;            // trigonometric scale; 0 means 2L-2

    int scale() const { return g > 0 ? g : theta.period(); }
    // Restricted: the chain 1..2L-3. Unrestricted: objects k+b, |k| <= N.
    GroupoidPtr groupoid() const {
        if (restricted) return std::make_shared<const Groupoid>(Groupoid::chain("A" + std::to_string(2 * theta.L - 3), 2 * theta.L - 3));
        return std::make_shared<const Groupoid>(Groupoid::action_window(b, -N, N));
    }
};

namespace detail {
// Pattern shared by the elliptic and trigonometric A operators, with br the
// bracket:
//   (+,-)->(+,-): [a+z][1]/([a][1-z]),  (-,+)->(-,+): [a-z][1]/([a][1-z]),
//   off-diagonals sqrt([a-1][a+1]) [z]/([a][1-z]).
inline SpectralOperator a_type(const std::string& name, const LegPtr& leg, int margin, std::function<cplx(cplx)> br) {
    SpectralOperator R{name, leg, {}, margin};
    R.eval = [leg, br](cplx z) {
        const cplx b1 = br(1.0), bz = br(z), b1z = br(1.0 - z);
        guard(b1z, std::abs(b1), "[1-z]");
        const Groupoid& G = *leg->groupoid;
        return face_operator(leg, [&](std::size_t o) {
            const cplx a = G.object_value(o);
            const cplx ba = br(a);
            guard(ba, std::abs(b1), "[a]");
            const cplx den = ba * b1z;
            FaceWeights w;
            w.pm_pm = br(a + z) * b1 / den;
            w.mp_mp = br(a - z) * b1 / den;
            const cplx off = std::sqrt(br(a - 1.0) * br(a + 1.0)) * bz / den;
            w.pm_mp = off;
            w.mp_pm = off;
            return w;
        });
    };
    return R;
}
}  // namespace detail

inline SpectralOperator build_elliptic_A(const AParams& P, GroupoidPtr g = nullptr) {
    if (!g) g = P.groupoid();
    auto leg = steps_leg(g, "VA");
    const ThetaParams t = P.theta;
    return detail::a_type("ell-a", leg, P.restricted ? 0 : 3, [t](cplx x) { return bracket(x, t); });
}

inline SpectralOperator build_trig_A(const AParams& P, GroupoidPtr g = nullptr) {
    if (!g) g = P.groupoid();
    auto leg = steps_leg(g, "VA");
    const int s = P.scale();
    return detail::a_type("trig-a", leg, P.restricted ? 0 : 3, [s](cplx x) { return trig_bracket(x, s); });
}

// --- checkers ---------------------------------------------------------------

// Base objects used by the triple-fiber checks.
inline std::vector<std::size_t> check_objects(const SpectralOperator& R) {
    return R.margin > 0 ? R.interior_objects(R.margin) : R.interior_objects(0);
}

// R^(23)(z-w) R^(12)(z) R^(23)(w) - R^(12)(w) R^(23)(z) R^(12)(z-w) on every
// three-step source fiber. Objects of the first leg's target set the base of
// the second and third legs, which is the dynamical shift.
inline double dybe_residual(const SpectralOperator& R, cplx z, cplx w) {
    const BlockOperator Rz = R(z), Rw = R(w), Rzw = R(z - w);
    Legs legs{R.leg, R.leg, R.leg};
    double worst = 0.0;
    for (auto o : check_objects(R)) {
        Basis b = Basis::source_fiber(legs, o);
        if (b.paths.empty()) continue;
        DenseMap I = DenseMap::identity(b);
        DenseMap L = apply(Rzw, 1, apply(Rz, 0, apply(Rw, 1, I)));
        DenseMap Rr = apply(Rw, 0, apply(Rz, 1, apply(Rzw, 0, I)));
        worst = std::max(worst, residual(L, Rr));
    }
    return worst;
}

// The non-dynamical YBE is the same identity; on a one-object groupoid the
// shift is trivial.
inline double ybe_residual(const SpectralOperator& R, cplx z, cplx w) { return dybe_residual(R, z, w); }

inline double inversion_residual(const SpectralOperator& R, cplx z) {
    const BlockOperator A = R(z), B = R(-z);
    Legs legs{R.leg, R.leg};
    double worst = 0.0;
    for (auto o : check_objects(R)) {
        Basis b = Basis::source_fiber(legs, o);
        if (b.paths.empty()) continue;
        DenseMap I = DenseMap::identity(b);
        worst = std::max(worst, residual(apply(A, 0, apply(B, 0, I)), I));
    }
    return worst;
}

inline CheckResult check_dybe(const SpectralOperator& R, cplx z, cplx w, double tol) {
    return make_check(R.name + ":dybe", dybe_residual(R, z, w), tol);
}
inline CheckResult check_ybe(const SpectralOperator& R, cplx z, cplx w, double tol) {
    return make_check(R.name + ":ybe", ybe_residual(R, z, w), tol);
}
inline CheckResult check_inversion(const SpectralOperator& R, cplx z, double tol) {
    return make_check(R.name + ":inversion", inversion_residual(R, z), tol);
}

// --- transposition ----------------------------------------------------------

// Connecting set with every arrow reversed, same arrow order.
inline ConnectingSetPtr reverse_connecting(const ConnectingSetPtr& pi) {
    auto r = std::make_shared<ConnectingSet>(pi->right(), pi->left());
    for (std::size_t i = 0; i < pi->size(); ++i) r->add(pi->tgt(i), pi->src(i), pi->arrow(i).id + "^-1");
    return r;
}

// Maps each leg to the leg carrying the inverse arrows. Groupoid legs are
// their own inverse leg (V_alpha ~ V_alpha^-1); connecting legs get a leg over
// the reversed connecting set, created once and cached.
class LegInverter {
public:
    LegPtr leg(const LegPtr& l) {
        if (l->groupoid) {
            for (std::size_t a = 0; a < l->size(); ++a)
                if (l->dim[a] != l->dim[l->groupoid->inverse(a)]) throw grading_error("transpose: V_alpha and V_alpha^-1 differ");
            return l;
        }
        auto it = cache_.find(l.get());
        if (it != cache_.end()) return it->second;
        auto r = connecting_leg(reverse_connecting(l->connecting), l->name + "^-1");
        auto* mut = const_cast<Leg*>(r.get());
        mut->dim = l->dim;
        detail::finish_leg(*mut, r->connecting->left()->num_objects());
        cache_[l.get()] = r;
        return r;
    }
    std::uint32_t arrow(const LegPtr& l, std::uint32_t a) const {
        return l->groupoid ? std::uint32_t(l->groupoid->inverse(a)) : a;
    }

private:
    std::map<const Leg*, LegPtr> cache_;
};

// coefficient of (x1..xn) -> (y1..ym) in T equals the coefficient of
// (ym^-1..y1^-1) -> (xn^-1..x1^-1) in the original.
inline BlockOperator transpose_block(const BlockOperator& op, LegInverter& inv) {
    Legs dom, cod;
    for (auto it = op.cod().rbegin(); it != op.cod().rend(); ++it) dom.push_back(inv.leg(*it));
    for (auto it = op.dom().rbegin(); it != op.dom().rend(); ++it) cod.push_back(inv.leg(*it));
    BlockOperator r(dom, cod);
    auto rev = [&](const Legs& legs, const Path& p) {
        Path q(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) q[p.size() - 1 - i] = inv.arrow(legs[i], p[i]);
        return q;
    };
    for (auto& [in, row] : op.blocks())
        for (auto& [out, m] : row) {
            if (m.size() != 1) throw grading_error("transpose: components of dimension > 1 are unsupported");
            r.add(rev(op.cod(), out), rev(op.dom(), in), m);
        }
    return r;
}

inline SpectralOperator transpose_op(const SpectralOperator& R) {
    SpectralOperator T = R;
    T.name = R.name + "^T";
    auto inv = std::make_shared<LegInverter>();
    auto src = R.eval;
    T.eval = [src, inv](cplx z) { return transpose_block(src(z), *inv); };
    return T;
}

// Exact equality of the coefficient tables of R(z) and R(z)^T. Returns the
// largest difference; symmetric iff it is exactly zero.
inline double symmetry_defect(const SpectralOperator& R, cplx z) {
    LegInverter inv;
    const BlockOperator A = R(z);
    const BlockOperator T = transpose_block(A, inv);
    double d = 0.0;
    auto cmp = [&](const BlockOperator& X, const BlockOperator& Y) {
        for (auto& [in, row] : X.blocks())
            for (auto& [out, m] : row) {
                const cplx v = m(0, 0), u = Y.coefficient(in, out);
                if (v != u) d = std::max(d, std::max(std::abs(v - u), 1e-300));
            }
    };
    cmp(A, T);
    cmp(T, A);
    return d;
}

inline CheckResult check_symmetric(const SpectralOperator& R, cplx z) {
    const double d = symmetry_defect(R, z);
    // smallest positive tolerance: passes iff the defect is exactly zero
    return make_check(R.name + ":symmetric", d, std::numeric_limits<double>::denorm_min());
}

}  // namespace dynyb

#endif
