// Intertwiners C(z) in Hom(V^pi1 (x) V^pi, V^pi (x) V^pi2) and the relations
// they satisfy: RCC, RDD for transposes, trace relations and the weight-zero
// relation.

#ifndef DYNYB_INTERTWINE_HPP
#define DYNYB_INTERTWINE_HPP

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "graded.hpp"
#include "rmodels.hpp"

namespace dynyb {

struct Intertwiner {
    std::string name;
    ConnectingSetPtr pi;
    LegPtr w1, p, w2;  // legs over pi1, pi and pi2
    std::function<BlockOperator(cplx)> eval;

    BlockOperator operator()(cplx z) const { return eval(z); }
};

namespace detail {
inline const Groupoid* tag_groupoid(const Leg& l, bool source) {
    if (l.groupoid) return l.groupoid.get();
    return source ? l.connecting->left().get() : l.connecting->right().get();
}
}  // namespace detail

// Smallest window depth among the objects a path visits.
inline int path_depth(const Legs& legs, const Path& p) {
    int d = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < p.size(); ++i) {
        d = std::min(d, detail::tag_groupoid(*legs[i], true)->window_depth(legs[i]->src[p[i]]));
        d = std::min(d, detail::tag_groupoid(*legs[i], false)->window_depth(legs[i]->tgt[p[i]]));
    }
    return d;
}

// All paths through `legs` (every start) whose objects stay at depth >= margin.
inline Basis interior_basis(const Legs& legs, int margin) {
    std::vector<Path> ps;
    for (auto& p : enumerate_paths(legs))
        if (path_depth(legs, p) >= margin) ps.push_back(p);
    return Basis::from_paths(legs, ps);
}

// --- concrete intertwiners --------------------------------------------------

// Baxter's vertex-face intertwiner from the eight-vertex leg to the SOS leg.
// Square with input (alpha, v -> m) and output (v -> k, k -> m), a = value(k):
//   m = k+1: H or Theta of lambda(s+ + a - z' - xi) for alpha = + or -,
//   m = k-1: H or Theta of lambda(s- + a + z' - xi),
// evaluated at z' = -z.
inline Intertwiner build_baxter_C(const SosParams& P, const LegPtr& v8, const LegPtr& sos) {
    const GroupoidPtr& G = sos->groupoid;
    auto pi = std::make_shared<ConnectingSet>(v8->groupoid, G);
    for (std::size_t k = 0; k < G->num_objects(); ++k) pi->add(0, k, "v>" + G->object_id(k));
    ConnectingSetPtr cpi = pi;
    auto p = connecting_leg(cpi, "Vpi");
    Intertwiner C{"baxter", cpi, v8, p, sos, {}};
    const auto e = P.e;
    const cplx xi = P.xi();
    const double sp = P.s_plus, sm = P.s_minus;
    C.eval = [=](cplx z) {
        const cplx zp = -z;
        BlockOperator op({v8, p}, {p, sos});
        for (std::size_t k = 0; k < G->num_objects(); ++k) {
            const cplx a = G->object_value(k);
            for (auto gam : sos->out[k]) {
                const std::size_t m = G->tgt(gam);
                const bool up = detail::step_dir(*G, gam) > 0;
                const cplx x = up ? e.lambda * (sp + a - zp - xi) : e.lambda * (sm + a + zp - xi);
                const cplx cH = jacobi_H(x, e), cT = jacobi_Theta(x, e);
                op.add({0, std::uint32_t(m)}, {std::uint32_t(k), gam}, cH);
                op.add({1, std::uint32_t(m)}, {std::uint32_t(k), gam}, cT);
            }
        }
        return op;
    };
    return C;
}

// Gauge intertwiner between the SOS and symmetric SOS legs over identity
// connecting arrows: square over a -> a' has coefficient (h(a) h(a'))^(-1/4).
inline Intertwiner build_hatC(const SosParams& P, const LegPtr& sos, const LegPtr& sym) {
    auto pi = std::make_shared<const ConnectingSet>(ConnectingSet::diagonal(sos->groupoid, sym->groupoid));
    auto p = connecting_leg(pi, "Vpihat");
    Intertwiner C{"hatC", pi, sos, p, sym, {}};
    const auto e = P.e;
    C.eval = [=](cplx) {
        const Groupoid& G = *sos->groupoid;
        const double h1 = std::abs(h(1.0, e));
        BlockOperator op({sos, p}, {p, sym});
        for (std::size_t a = 0; a < G.num_objects(); ++a)
            for (auto al : sos->out[a]) {
                const std::size_t b = G.tgt(al);
                const cplx prod = guard(h(G.object_value(a), e), h1, "h(a)") * guard(h(G.object_value(b), e), h1, "h(a')");
                const cplx c = std::pow(prod, -0.25);
                op.add({al, std::uint32_t(pi->find(b, b))}, {std::uint32_t(pi->find(a, a)), al}, c);
            }
        return op;
    };
    return C;
}

// (alpha, 1) -> (1, alpha) over the diagonal connecting set of a leg's groupoid.
inline Intertwiner identity_intertwiner(const LegPtr& w) {
    auto pi = std::make_shared<const ConnectingSet>(ConnectingSet::diagonal(w->groupoid, w->groupoid));
    auto p = connecting_leg(pi, "Vid");
    Intertwiner C{"id", pi, w, p, w, {}};
    C.eval = [=](cplx) {
        BlockOperator op({w, p}, {p, w});
        for (std::size_t a = 0; a < w->num_source_objects(); ++a)
            for (auto al : w->out[a]) {
                const std::size_t b = w->tgt[al];
                const int d = w->dim[al];
                op.add({al, std::uint32_t(pi->find(b, b))}, {std::uint32_t(pi->find(a, a)), al}, Mat::Identity(d, d));
            }
        return op;
    };
    return C;
}

// D^(23) C^(12) as an intertwiner over the composite connecting set whose
// arrows are the composable pairs (beta, beta_hat).
inline Intertwiner compose_intertwiners(const Intertwiner& C, const Intertwiner& D) {
    if (C.w2.get() != D.w1.get()) throw grading_error("compose_intertwiners: middle legs differ");
    auto pi = std::make_shared<ConnectingSet>(C.pi->left(), D.pi->right());
    auto idx = std::make_shared<std::map<std::pair<std::size_t, std::size_t>, std::size_t>>();
    for (std::size_t b = 0; b < C.pi->size(); ++b)
        for (auto bh : D.pi->from(C.pi->tgt(b)))
            (*idx)[{b, bh}] = pi->add(C.pi->src(b), D.pi->tgt(bh), C.pi->arrow(b).id + "|" + D.pi->arrow(bh).id);
    ConnectingSetPtr cpi = pi;
    auto p = connecting_leg(cpi, C.p->name + "|" + D.p->name);
    Intertwiner R{D.name + "*" + C.name, cpi, C.w1, p, D.w2, {}};
    R.eval = [C, D, p, idx](cplx z) {
        const BlockOperator c = C(z), d = D(z);
        Legs in{C.w1, C.p, D.p};
        std::vector<Path> ins;
        for (auto& [key, val] : *idx)
            for (std::size_t a = 0; a < C.w1->num_source_objects(); ++a)
                for (auto al : C.w1->out[a])
                    if (C.w1->tgt[al] == C.pi->src(key.first))
                        ins.push_back({al, std::uint32_t(key.first), std::uint32_t(key.second)});
        Basis b = Basis::from_paths(in, ins);
        DenseMap X = apply(d, 1, apply(c, 0, DenseMap::identity(b)));
        BlockOperator op({C.w1, p}, {p, D.w2});
        for (std::size_t i = 0; i < X.rows.paths.size(); ++i) {
            const auto& r = X.rows.paths[i];
            const std::uint32_t outb = std::uint32_t(idx->at({r[0], r[1]}));
            for (std::size_t j = 0; j < b.paths.size(); ++j) {
                const auto& q = b.paths[j];
                Mat m = X.M.block(X.rows.offset[i], b.offset[j], X.rows.size_of(i), b.size_of(j));
                if (m.cwiseAbs().maxCoeff() == 0.0) continue;
                op.add({q[0], std::uint32_t(idx->at({q[1], q[2]}))}, {outb, r[2]}, m);
            }
        }
        return op;
    };
    return R;
}

// Reversed-direction coefficient table: C^T has input (gamma^-1, beta_t^-1)
// and output (beta_b^-1, alpha^-1) with the coefficient of
// (alpha, beta_b) -> (beta_t, gamma).
inline Intertwiner transpose_intertwiner(const Intertwiner& C) {
    auto inv = std::make_shared<LegInverter>();
    LegPtr p = inv->leg(C.p);
    Intertwiner T{C.name + "^T", p->connecting, C.w2, p, C.w1, {}};
    auto src = C.eval;
    T.eval = [src, inv](cplx z) { return transpose_block(src(z), *inv); };
    return T;
}

// --- relation checkers ------------------------------------------------------

// C(w)^(12) C(z)^(23) R1(z-w)^(12) - R2(z-w)^(23) C(z)^(12) C(w)^(23) on all
// input paths whose objects have window depth >= margin.
inline double rcc_residual(const Intertwiner& C, const SpectralOperator& R1, const SpectralOperator& R2, cplx z, cplx w,
                           int margin = 3) {
    const BlockOperator Cz = C(z), Cw = C(w), r1 = R1(z - w), r2 = R2(z - w);
    Basis b = interior_basis({C.w1, C.w1, C.p}, margin);
    DenseMap I = DenseMap::identity(b);
    DenseMap L = apply(Cw, 0, apply(Cz, 1, apply(r1, 0, I)));
    DenseMap R = apply(r2, 1, apply(Cz, 0, apply(Cw, 1, I)));
    return residual(L, R);
}

// R1(z-w)^(23) D(z)^(12) D(w)^(23) - D(w)^(12) D(z)^(23) R2(z-w)^(12), the
// reversed form of the RCC, for D in Hom(V^pi2 (x) V^pi', V^pi' (x) V^pi1).
inline double rdd_residual(const Intertwiner& D, const SpectralOperator& R1, const SpectralOperator& R2, cplx z, cplx w,
                           int margin = 3) {
    const BlockOperator Dz = D(z), Dw = D(w), r1 = R1(z - w), r2 = R2(z - w);
    Basis b = interior_basis({D.w1, D.w1, D.p}, margin);
    DenseMap I = DenseMap::identity(b);
    DenseMap L = apply(r1, 1, apply(Dz, 0, apply(Dw, 1, I)));
    DenseMap R = apply(Dw, 0, apply(Dz, 1, apply(r2, 0, I)));
    return residual(L, R);
}

inline CheckResult check_rcc(const Intertwiner& C, const SpectralOperator& R1, const SpectralOperator& R2, cplx z, cplx w,
                             double tol) {
    return make_check(C.name + ":rcc", rcc_residual(C, R1, R2, z, w), tol);
}
inline CheckResult check_rdd(const Intertwiner& D, const SpectralOperator& R1, const SpectralOperator& R2, cplx z, cplx w,
                             double tol) {
    return make_check(D.name + ":rdd", rdd_residual(D, R1, R2, z, w), tol);
}

// An operator on V (x) V read as an intertwiner with pi = pi1 = pi2.
inline Intertwiner as_intertwiner(const SpectralOperator& R) {
    auto G = R.leg->groupoid;
    auto pi = std::make_shared<const ConnectingSet>(ConnectingSet::diagonal(G, G));
    Intertwiner C{R.name, pi, R.leg, R.leg, R.leg, R.eval};
    return C;
}

// Trace relation on fused rows of N sites:
//   tr R1(u) * tr C(z') = tr C(z') * tr R2(u),
// both sides summed per grade of the key path and compared on grades whose
// objects lie at window depth >= N + 1. Fused entries grow like a product of
// N weights, so the residual is taken relative to max(1, largest entry).
inline double trace_relation_residual(const Intertwiner& C, const SpectralOperator& R1, const SpectralOperator& R2, cplx u,
                                      cplx zp, std::size_t N) {
    auto t1 = partial_trace(R1(u), N);
    auto tc = partial_trace(C(zp), N);
    auto t2 = partial_trace(R2(u), N);
    auto L = group_by_class(convolve(t1, tc));
    auto R = group_by_class(convolve(tc, t2));
    const Groupoid* g1 = C.w1->groupoid.get();
    const Groupoid* g2 = C.w2->groupoid.get();
    const int need = int(N) + 1;
    auto keep = [&](const PathClass& k) {
        return g1->window_depth(k.start.index) >= need && g2->window_depth(k.end.index) >= need;
    };
    return residual(L, R, keep) / std::max(1.0, max_entry(L, keep));
}

// tr R(z) * tr R(z') = tr R(z') * tr R(z) for fused rows of N sites.
inline double commuting_transfer_residual(const SpectralOperator& R, cplx z, cplx zp, std::size_t N) {
    auto a = partial_trace(R(z), N), b = partial_trace(R(zp), N);
    auto L = group_by_class(convolve(a, b));
    auto Rr = group_by_class(convolve(b, a));
    const Groupoid& g = R.groupoid();
    const int need = int(N) + 1;
    auto keep = [&](const PathClass& k) { return g.window_depth(k.start.index) >= need && g.window_depth(k.end.index) >= need; };
    return residual(L, Rr, keep) / std::max(1.0, max_entry(L, keep));
}

inline CheckResult check_trace_relation(const Intertwiner& C, const SpectralOperator& R1, const SpectralOperator& R2, cplx u,
                                        cplx zp, std::size_t N, double tol) {
    return make_check(C.name + ":trace", trace_relation_residual(C, R1, R2, u, zp, N), tol);
}

struct WeightZeroResult {
    double relation = 0.0;       // X_L R1^(12) X_R^+ - R2^(23)
    double right_inverse = 0.0;  // X_R X_R^+ - id
    bool dims_compatible = true; // rank of X_R equals its row count on every fiber
};

// Weight-zero (ice rule) relation: with X_L = C(w)^(12) C(z)^(23) and
// X_R = C(z)^(12) C(w)^(23), X_L R1^(12)(z-w) X_R^+ = R2^(23)(z-w), where X_R^+
// is a right inverse. Blocks with different outer connecting arrows must
// vanish, which the comparison on the full fiber includes.
inline WeightZeroResult weight_zero_residual(const Intertwiner& C, const SpectralOperator& R1, const SpectralOperator& R2,
                                             cplx z, cplx w, int margin = 3) {
    const BlockOperator Cz = C(z), Cw = C(w), r1 = R1(z - w), r2 = R2(z - w);
    Basis b = interior_basis({C.w1, C.w1, C.p}, margin);
    DenseMap I = DenseMap::identity(b);
    DenseMap XR = apply(Cz, 0, apply(Cw, 1, I));
    WeightZeroResult r;
    // inputs are interior, so every output of their grades is present
    const Basis& rb = XR.rows;
    const Mat& XRm = XR.M;
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(XRm);
    if (cod.rank() < rb.dim) r.dims_compatible = false;
    Mat Xp = cod.pseudoInverse();
    r.right_inverse = rb.dim ? (XRm * Xp - Mat::Identity(rb.dim, rb.dim)).cwiseAbs().maxCoeff() : 0.0;
    DenseMap P{b, rb, Xp};
    DenseMap lhs = apply(Cw, 0, apply(Cz, 1, apply(r1, 0, P)));
    DenseMap rhs = apply(r2, 1, DenseMap::identity(rb));
    // compare on the interior rows only
    auto restrict_rows = [&](const DenseMap& X) {
        std::vector<Path> ps;
        for (auto& p : X.rows.paths)
            if (rb.index.count(p)) ps.push_back(p);
        Basis nb = Basis::from_paths(X.rows.legs, ps);
        Mat m = Mat::Zero(nb.dim, X.cols.dim);
        for (std::size_t i = 0; i < X.rows.paths.size(); ++i) {
            auto it = nb.index.find(X.rows.paths[i]);
            if (it != nb.index.end()) m.middleRows(nb.offset[it->second], nb.size_of(it->second)) = X.M.middleRows(X.rows.offset[i], X.rows.size_of(i));
        }
        return DenseMap{nb, X.cols, m};
    };
    r.relation = residual(restrict_rows(lhs), restrict_rows(rhs));
    return r;
}

inline Report check_weight_zero(const Intertwiner& C, const SpectralOperator& R1, const SpectralOperator& R2, cplx z, cplx w,
                                double tol) {
    Report rep;
    rep.suite = "weight-zero";
    auto r = weight_zero_residual(C, R1, R2, z, w);
    rep.add("relation", r.relation, tol);
    rep.add("right_inverse", r.right_inverse, tol);
    rep.add("target_fiber_dims", r.dims_compatible ? 0.0 : 1.0, 0.5);
    return rep;
}

}  // namespace dynyb

#endif
