// Groupoid-graded vector spaces and operators between tensor products of them.
//
// A Leg is one tensor factor: a family of arrows (groupoid arrows or
// connecting arrows) with a dimension each. A path through a list of legs is
// a sequence of composable arrows. Operators are stored blockwise, keyed by
// (input path, output path); the grading constraint is that both paths have
// the same endpoints and, inside a single groupoid, the same composite.
//
// Basis order inside a fiber: paths sorted lexicographically by arrow index,
// then by the row-major component index of the tensor factors.

#ifndef DYNYB_GRADED_HPP
#define DYNYB_GRADED_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "groupoid.hpp"

namespace dynyb {

using Mat = Eigen::MatrixXcd;
using Path = std::vector<std::uint32_t>;

struct grading_error : std::logic_error {
    using std::logic_error::logic_error;
};
struct not_invertible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double inverse_rel_cutoff = 1e-10;

struct ObjectRef {
    const void* tag = nullptr;
    std::size_t index = 0;
    auto operator<=>(const ObjectRef&) const = default;
};

struct Leg {
    std::string name;
    GroupoidPtr groupoid;            // set for groupoid legs
    ConnectingSetPtr connecting;     // set for connecting legs
    const void* src_tag = nullptr;
    const void* tgt_tag = nullptr;
    std::vector<std::size_t> src, tgt;
    std::vector<std::string> ids;
    std::vector<int> dim;
    std::vector<std::vector<std::uint32_t>> out;  // per source object, arrows of positive dimension

    std::size_t size() const { return ids.size(); }
    ObjectRef source(std::uint32_t a) const { return {src_tag, src[a]}; }
    ObjectRef target(std::uint32_t a) const { return {tgt_tag, tgt[a]}; }
    std::size_t num_source_objects() const { return out.size(); }
    std::uint32_t index(const std::string& id) const {
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (ids[i] == id) return std::uint32_t(i);
        throw std::out_of_range("leg " + name + ": unknown arrow " + id);
    }
};
using LegPtr = std::shared_ptr<const Leg>;

namespace detail {
inline void finish_leg(Leg& l, std::size_t nsrc) {
    l.out.assign(nsrc, {});
    for (std::size_t a = 0; a < l.size(); ++a)
        if (l.dim[a] > 0) l.out[l.src[a]].push_back(std::uint32_t(a));
}
}  // namespace detail

// Leg over all arrows of a groupoid; the leg index of an arrow equals its
// groupoid index.
inline LegPtr groupoid_leg(GroupoidPtr g, const std::function<int(std::size_t)>& dim, std::string name) {
    auto l = std::make_shared<Leg>();
    l->name = std::move(name);
    l->groupoid = g;
    l->src_tag = l->tgt_tag = g.get();
    for (std::size_t a = 0; a < g->num_arrows(); ++a) {
        l->src.push_back(g->src(a));
        l->tgt.push_back(g->tgt(a));
        l->ids.push_back(g->arrow(a).id);
        int d = dim(a);
        if (d < 0) throw std::invalid_argument("negative dimension");
        l->dim.push_back(d);
    }
    detail::finish_leg(*l, g->num_objects());
    return l;
}

// Dimension one on the generating arrows, zero elsewhere.
inline LegPtr steps_leg(GroupoidPtr g, std::string name) {
    auto* raw = g.get();
    return groupoid_leg(g, [raw](std::size_t a) { return raw->arrow(a).generator ? 1 : 0; }, std::move(name));
}

// Dimension one on every arrow.
inline LegPtr full_leg(GroupoidPtr g, std::string name) {
    return groupoid_leg(g, [](std::size_t) { return 1; }, std::move(name));
}

inline LegPtr connecting_leg(ConnectingSetPtr pi, std::string name, int d = 1) {
    auto l = std::make_shared<Leg>();
    l->name = std::move(name);
    l->connecting = pi;
    l->src_tag = pi->left().get();
    l->tgt_tag = pi->right().get();
    for (std::size_t i = 0; i < pi->size(); ++i) {
        l->src.push_back(pi->src(i));
        l->tgt.push_back(pi->tgt(i));
        l->ids.push_back(pi->arrow(i).id);
        l->dim.push_back(d);
    }
    detail::finish_leg(*l, pi->left()->num_objects());
    return l;
}

using Legs = std::vector<LegPtr>;

inline bool same_legs(const Legs& a, const Legs& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].get() != b[i].get()) return false;
    return true;
}

inline std::string describe(const Legs& legs, const Path& p) {
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + legs.at(i)->ids.at(p[i]);
    return s + ")";
}

inline bool path_valid(const Legs& legs, const Path& p) {
    if (p.size() != legs.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] >= legs[i]->size()) return false;
        if (i > 0 && legs[i - 1]->target(p[i - 1]) != legs[i]->source(p[i])) return false;
    }
    return true;
}

inline ObjectRef path_start(const Legs& legs, const Path& p) { return legs.front()->source(p.front()); }
inline ObjectRef path_end(const Legs& legs, const Path& p) { return legs.back()->target(p.back()); }

inline int path_dim(const Legs& legs, const Path& p) {
    int d = 1;
    for (std::size_t i = 0; i < p.size(); ++i) d *= legs[i]->dim[p[i]];
    return d;
}

// Grade of a path: endpoints, plus the composite when every leg lives in the
// same groupoid.
struct PathClass {
    ObjectRef start, end;
    std::vector<std::size_t> word;
    auto operator<=>(const PathClass&) const = default;
};

inline const Groupoid* common_groupoid(const Legs& legs) {
    const Groupoid* g = nullptr;
    for (auto& l : legs) {
        if (!l->groupoid) return nullptr;
        if (g && g != l->groupoid.get()) return nullptr;
        g = l->groupoid.get();
    }
    return g;
}

inline PathClass path_class(const Legs& legs, const Path& p) {
    PathClass c{path_start(legs, p), path_end(legs, p), {}};
    if (auto* g = common_groupoid(legs)) {
        std::vector<std::size_t> arrows(p.begin(), p.end());
        c.word = g->word_class(c.start.index, arrows);
    }
    return c;
}

inline bool same_grade(const Legs& dl, const Path& in, const Legs& cl, const Path& out) {
    if (path_start(dl, in) != path_start(cl, out) || path_end(dl, in) != path_end(cl, out)) return false;
    auto* g1 = common_groupoid(dl);
    auto* g2 = common_groupoid(cl);
    if (g1 && g1 == g2) return path_class(dl, in).word == path_class(cl, out).word;
    return true;
}

// Tensor summands of V (x) W per grade: every composable pair, grouped by the
// class of the composite.
inline std::map<PathClass, std::vector<Path>> graded_tensor(const LegPtr& v, const LegPtr& w) {
    if (v->groupoid != w->groupoid || !v->groupoid) throw grading_error("graded_tensor: groupoid mismatch");
    std::map<PathClass, std::vector<Path>> r;
    Legs legs{v, w};
    for (std::size_t o = 0; o < v->num_source_objects(); ++o)
        for (auto a : v->out[o])
            for (auto b : w->out[v->tgt[a]]) {
                Path p{a, b};
                r[path_class(legs, p)].push_back(p);
            }
    return r;
}

// ---------------------------------------------------------------------------
// Block operators

class BlockOperator {
public:
    using Row = std::map<Path, Mat>;

    BlockOperator() = default;
    BlockOperator(Legs dom, Legs cod) : dom_(std::move(dom)), cod_(std::move(cod)) {
        if (dom_.empty() || cod_.empty()) throw grading_error("operator without legs");
    }

    const Legs& dom() const { return dom_; }
    const Legs& cod() const { return cod_; }
    const std::map<Path, Row>& blocks() const { return blocks_; }
    bool empty() const { return blocks_.empty(); }

    // Accumulates m into the (in, out) block after checking grading and shape.
    void add(const Path& in, const Path& out, const Mat& m) {
        if (!path_valid(dom_, in)) throw grading_error("invalid input path " + describe(dom_, in));
        if (!path_valid(cod_, out)) throw grading_error("invalid output path " + describe(cod_, out));
        if (!same_grade(dom_, in, cod_, out))
            throw grading_error("grading violated at " + describe(dom_, in) + " -> " + describe(cod_, out));
        if (m.rows() != path_dim(cod_, out) || m.cols() != path_dim(dom_, in))
            throw grading_error("shape mismatch at " + describe(dom_, in) + " -> " + describe(cod_, out));
        auto& row = blocks_[in];
        auto it = row.find(out);
        if (it == row.end())
            row.emplace(out, m);
        else
            it->second += m;
    }
    void add(const Path& in, const Path& out, cplx v) { add(in, out, Mat::Constant(1, 1, v)); }

    const Row* outputs(const Path& in) const {
        auto it = blocks_.find(in);
        return it == blocks_.end() ? nullptr : &it->second;
    }

    // Scalar coefficient of a one-dimensional block, zero if absent.
    cplx coefficient(const Path& in, const Path& out) const {
        auto r = outputs(in);
        if (!r) return 0.0;
        auto it = r->find(out);
        if (it == r->end()) return 0.0;
        if (it->second.size() != 1) throw grading_error("coefficient of a block with dim > 1");
        return it->second(0, 0);
    }

private:
    Legs dom_, cod_;
    std::map<Path, Row> blocks_;
};

// All paths through `legs`, optionally from one start object.
inline std::vector<Path> enumerate_paths(const Legs& legs, std::optional<std::size_t> start = std::nullopt) {
    std::vector<Path> r;
    Path p(legs.size());
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t obj) {
        if (i == legs.size()) {
            r.push_back(p);
            return;
        }
        if (obj >= legs[i]->num_source_objects()) return;
        for (auto a : legs[i]->out[obj]) {
            p[i] = a;
            rec(i + 1, legs[i]->tgt[a]);
        }
    };
    if (start) {
        rec(0, *start);
    } else {
        for (std::size_t o = 0; o < legs.front()->num_source_objects(); ++o) rec(0, o);
    }
    return r;
}

inline BlockOperator identity_block(const Legs& legs) {
    BlockOperator id(legs, legs);
    for (auto& p : enumerate_paths(legs)) {
        int d = path_dim(legs, p);
        id.add(p, p, Mat::Identity(d, d));
    }
    return id;
}

// F o G: apply G, then F.
inline BlockOperator compose_blocks(const BlockOperator& F, const BlockOperator& G) {
    if (!same_legs(G.cod(), F.dom())) throw grading_error("compose_blocks: leg mismatch");
    BlockOperator r(G.dom(), F.cod());
    for (auto& [in, row] : G.blocks())
        for (auto& [mid, gm] : row)
            if (auto fr = F.outputs(mid))
                for (auto& [out, fm] : *fr) r.add(in, out, fm * gm);
    return r;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
}

inline Path concat(const Path& a, const Path& b) {
    Path r(a);
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

// F (x) G on concatenated paths.
inline BlockOperator tensor_blocks(const BlockOperator& F, const BlockOperator& G) {
    Legs dom = F.dom(), cod = F.cod();
    dom.insert(dom.end(), G.dom().begin(), G.dom().end());
    cod.insert(cod.end(), G.cod().begin(), G.cod().end());
    BlockOperator r(dom, cod);
    for (auto& [fi, frow] : F.blocks())
        for (auto& [gi, grow] : G.blocks()) {
            if (path_end(F.dom(), fi) != path_start(G.dom(), gi)) continue;
            for (auto& [fo, fm] : frow)
                for (auto& [go, gm] : grow) r.add(concat(fi, gi), concat(fo, go), kron(fm, gm));
        }
    return r;
}

// ---------------------------------------------------------------------------
// Dense restrictions

struct Basis {
    Legs legs;
    std::vector<Path> paths;
    std::vector<int> offset;
    int dim = 0;
    std::map<Path, std::size_t> index;

    static Basis from_paths(Legs legs, std::vector<Path> paths) {
        Basis b;
        b.legs = std::move(legs);
        std::sort(paths.begin(), paths.end());
        paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
        b.paths = std::move(paths);
        for (std::size_t i = 0; i < b.paths.size(); ++i) {
            b.index[b.paths[i]] = i;
            b.offset.push_back(b.dim);
            b.dim += path_dim(b.legs, b.paths[i]);
        }
        return b;
    }
    static Basis source_fiber(const Legs& legs, std::size_t start) {
        return from_paths(legs, enumerate_paths(legs, start));
    }
    int size_of(std::size_t i) const { return (i + 1 < paths.size() ? offset[i + 1] : dim) - offset[i]; }
    bool same_as(const Basis& o) const { return same_legs(legs, o.legs) && paths == o.paths; }
};

// Linear map between two path bases.
struct DenseMap {
    Basis rows, cols;
    Mat M;

    static DenseMap identity(const Basis& b) { return {b, b, Mat::Identity(b.dim, b.dim)}; }
};

namespace detail {
// Applies an operator at legs [pos, pos+k) to the rows of X belonging to one
// path r, accumulating into `acc` keyed by the new path.
inline void apply_rows(const BlockOperator& op, std::size_t pos, const Legs& legs, const Path& r,
                       const Mat& X, std::map<Path, Mat>& acc) {
    const std::size_t k = op.dom().size();
    Path sub(r.begin() + long(pos), r.begin() + long(pos + k));
    auto outs = op.outputs(sub);
    if (!outs) return;
    int Ld = 1, Rd = 1, Mi = 1;
    for (std::size_t i = 0; i < pos; ++i) Ld *= legs[i]->dim[r[i]];
    for (std::size_t i = pos; i < pos + k; ++i) Mi *= legs[i]->dim[r[i]];
    for (std::size_t i = pos + k; i < r.size(); ++i) Rd *= legs[i]->dim[r[i]];
    for (auto& [o, m] : *outs) {
        Path np(r.begin(), r.begin() + long(pos));
        np.insert(np.end(), o.begin(), o.end());
        np.insert(np.end(), r.begin() + long(pos + k), r.end());
        const int Mo = int(m.rows());
        auto it = acc.find(np);
        if (it == acc.end()) it = acc.emplace(np, Mat::Zero(Ld * Mo * Rd, X.cols())).first;
        Mat& B = it->second;
        for (int l = 0; l < Ld; ++l)
            for (int oo = 0; oo < Mo; ++oo)
                for (int ii = 0; ii < Mi; ++ii) {
                    const cplx c = m(oo, ii);
                    if (c == cplx(0.0)) continue;
                    for (int rr = 0; rr < Rd; ++rr) B.row((l * Mo + oo) * Rd + rr) += c * X.row((l * Mi + ii) * Rd + rr);
                }
    }
}
}  // namespace detail

// op acting on legs [pos, pos+k) of the row paths of X.
inline DenseMap apply(const BlockOperator& op, std::size_t pos, const DenseMap& X) {
    const auto& L = X.rows.legs;
    const std::size_t k = op.dom().size();
    if (pos + k > L.size()) throw grading_error("apply: position out of range");
    for (std::size_t i = 0; i < k; ++i)
        if (L[pos + i].get() != op.dom()[i].get()) throw grading_error("apply: leg mismatch at position " + std::to_string(pos + i));
    Legs nl(L.begin(), L.begin() + long(pos));
    nl.insert(nl.end(), op.cod().begin(), op.cod().end());
    nl.insert(nl.end(), L.begin() + long(pos + k), L.end());
    std::map<Path, Mat> acc;
    for (std::size_t i = 0; i < X.rows.paths.size(); ++i)
        detail::apply_rows(op, pos, L, X.rows.paths[i], X.M.middleRows(X.rows.offset[i], X.rows.size_of(i)), acc);
    std::vector<Path> ps;
    for (auto& [p, _] : acc) ps.push_back(p);
    DenseMap r{Basis::from_paths(nl, ps), X.cols, Mat::Zero(0, 0)};
    r.M = Mat::Zero(r.rows.dim, X.cols.dim);
    for (std::size_t i = 0; i < r.rows.paths.size(); ++i) r.M.middleRows(r.rows.offset[i], r.rows.size_of(i)) = acc.at(r.rows.paths[i]);
    return r;
}

// Re-expresses X in a row basis containing all its nonzero rows.
inline Mat embed_rows(const DenseMap& X, const Basis& target) {
    Mat r = Mat::Zero(target.dim, X.M.cols());
    for (std::size_t i = 0; i < X.rows.paths.size(); ++i) {
        auto it = target.index.find(X.rows.paths[i]);
        if (it == target.index.end()) {
            if (X.M.middleRows(X.rows.offset[i], X.rows.size_of(i)).cwiseAbs().maxCoeff() > 0.0)
                throw grading_error("embed_rows: path " + describe(X.rows.legs, X.rows.paths[i]) + " outside basis");
            continue;
        }
        r.middleRows(target.offset[it->second], X.rows.size_of(i)) = X.M.middleRows(X.rows.offset[i], X.rows.size_of(i));
    }
    return r;
}

inline Basis union_basis(const Basis& a, const Basis& b) {
    if (!same_legs(a.legs, b.legs)) throw grading_error("union_basis: leg mismatch");
    auto ps = a.paths;
    ps.insert(ps.end(), b.paths.begin(), b.paths.end());
    return Basis::from_paths(a.legs, ps);
}

inline DenseMap transpose_map(const DenseMap& X) { return {X.cols, X.rows, X.M.transpose()}; }

// X re-expressed in larger row and column bases.
inline Mat embed(const DenseMap& X, const Basis& R, const Basis& C) {
    Mat r = Mat::Zero(R.dim, C.dim);
    for (std::size_t i = 0; i < X.rows.paths.size(); ++i) {
        const std::size_t ri = R.index.at(X.rows.paths[i]);
        for (std::size_t j = 0; j < X.cols.paths.size(); ++j) {
            const std::size_t cj = C.index.at(X.cols.paths[j]);
            r.block(R.offset[ri], C.offset[cj], X.rows.size_of(i), X.cols.size_of(j)) =
                X.M.block(X.rows.offset[i], X.cols.offset[j], X.rows.size_of(i), X.cols.size_of(j));
        }
    }
    return r;
}

// Sum of two maps over the union of their bases.
inline DenseMap add(const DenseMap& A, const DenseMap& B) {
    Basis R = union_basis(A.rows, B.rows), C = union_basis(A.cols, B.cols);
    return {R, C, embed(A, R, C) + embed(B, R, C)};
}

// A * B where the columns of A and the rows of B are matched by path.
inline DenseMap multiply(const DenseMap& A, const DenseMap& B) {
    if (!same_legs(A.cols.legs, B.rows.legs)) throw grading_error("multiply: leg mismatch");
    Mat Bm = Mat::Zero(A.cols.dim, B.cols.dim);
    for (std::size_t i = 0; i < B.rows.paths.size(); ++i) {
        auto it = A.cols.index.find(B.rows.paths[i]);
        if (it == A.cols.index.end()) continue;
        Bm.middleRows(A.cols.offset[it->second], B.rows.size_of(i)) = B.M.middleRows(B.rows.offset[i], B.rows.size_of(i));
    }
    return {A.rows, B.cols, A.M * Bm};
}

// Max-norm of A - B over the union of row and column bases.
inline double residual(const DenseMap& A, const DenseMap& B) {
    DenseMap nb{B.rows, B.cols, -B.M};
    DenseMap d = add(A, nb);
    return d.M.size() ? d.M.cwiseAbs().maxCoeff() : 0.0;
}

// Matrix of an endomorphism-shaped operator on the source fiber of `start`.
inline DenseMap restrict_source_fiber(const BlockOperator& F, std::size_t start) {
    if (!same_legs(F.dom(), F.cod())) throw grading_error("restrict_source_fiber: not an endomorphism");
    Basis b = Basis::source_fiber(F.dom(), start);
    if (b.paths.empty()) throw grading_error("restrict_source_fiber: empty fiber");
    DenseMap r = apply(F, 0, DenseMap::identity(b));
    return {b, b, embed_rows(r, b)};
}

// ---------------------------------------------------------------------------
// Convolution elements: families of maps indexed by paths of arrows.

struct ConvolutionElement {
    Legs key_legs;
    std::map<Path, DenseMap> terms;
};

// (f * g)(a1 a2) = g(a2) f(a1): f along the first arrow, then g along the second.
inline ConvolutionElement convolve(const ConvolutionElement& f, const ConvolutionElement& g) {
    ConvolutionElement r;
    r.key_legs = f.key_legs;
    r.key_legs.insert(r.key_legs.end(), g.key_legs.begin(), g.key_legs.end());
    for (auto& [k1, m1] : f.terms)
        for (auto& [k2, m2] : g.terms) {
            if (path_end(f.key_legs, k1) != path_start(g.key_legs, k2)) continue;
            r.terms.emplace(concat(k1, k2), multiply(m2, m1));
        }
    return r;
}

// Sums the terms of an element over the grade of their key paths.
inline std::map<PathClass, DenseMap> group_by_class(const ConvolutionElement& e) {
    std::map<PathClass, DenseMap> r;
    for (auto& [k, m] : e.terms) {
        auto c = path_class(e.key_legs, k);
        auto it = r.find(c);
        if (it == r.end())
            r.emplace(c, m);
        else
            it->second = add(it->second, m);
    }
    return r;
}

inline double residual(const std::map<PathClass, DenseMap>& a, const std::map<PathClass, DenseMap>& b,
                       const std::function<bool(const PathClass&)>& keep = {}) {
    std::set<PathClass> ks;
    for (auto& [k, _] : a) ks.insert(k);
    for (auto& [k, _] : b) ks.insert(k);
    double r = 0.0;
    for (auto& k : ks) {
        if (keep && !keep(k)) continue;
        auto ia = a.find(k), ib = b.find(k);
        if (ia == a.end()) r = std::max(r, ib->second.M.size() ? ib->second.M.cwiseAbs().maxCoeff() : 0.0);
        else if (ib == b.end()) r = std::max(r, ia->second.M.size() ? ia->second.M.cwiseAbs().maxCoeff() : 0.0);
        else r = std::max(r, residual(ia->second, ib->second));
    }
    return r;
}

// Largest entry over the kept classes.
inline double max_entry(const std::map<PathClass, DenseMap>& a, const std::function<bool(const PathClass&)>& keep = {}) {
    double m = 0.0;
    for (auto& [k, x] : a)
        if ((!keep || keep(k)) && x.M.size()) m = std::max(m, x.M.cwiseAbs().maxCoeff());
    return m;
}

// Partial trace of a fused row C_N = C^(12) C^(23) ... C^(N,N+1), where C has
// legs (w1, pi) -> (pi, w2). For every connecting arrow b the result maps the
// w1-paths closed at s(b) to the w2-paths closed at t(b).
inline ConvolutionElement partial_trace(const BlockOperator& C, std::size_t N) {
    if (C.dom().size() != 2 || C.cod().size() != 2) throw grading_error("partial_trace: expects a two-leg operator");
    const LegPtr w1 = C.dom()[0], p = C.dom()[1], p2 = C.cod()[0], w2 = C.cod()[1];
    if (p.get() != p2.get()) throw grading_error("partial_trace: middle legs differ");
    Legs in_legs(N, w1), out_legs(N, w2), xl = in_legs, yl = out_legs;
    in_legs.push_back(p);
    out_legs.insert(out_legs.begin(), p);
    ConvolutionElement r;
    r.key_legs = {p};
    for (std::uint32_t b = 0; b < p->size(); ++b) {
        if (p->dim[b] == 0) continue;
        const int db = p->dim[b];
        std::vector<Path> xs;
        for (auto& x : enumerate_paths(xl, p->src[b]))
            if (path_end(xl, x) == p->source(b)) xs.push_back(x);
        if (xs.empty()) continue;
        std::vector<Path> ins;
        for (auto& x : xs) {
            auto q = x;
            q.push_back(b);
            ins.push_back(q);
        }
        Basis ib = Basis::from_paths(in_legs, ins);
        DenseMap X = DenseMap::identity(ib);
        for (std::size_t i = N; i-- > 0;) X = apply(C, i, X);
        Basis xb = Basis::from_paths(xl, xs);
        std::vector<Path> ys;
        for (auto& rp : X.rows.paths)
            if (rp.front() == b) ys.emplace_back(rp.begin() + 1, rp.end());
        Basis yb = Basis::from_paths(yl, ys);
        Mat T = Mat::Zero(yb.dim, xb.dim);
        for (std::size_t yi = 0; yi < X.rows.paths.size(); ++yi) {
            const auto& rp = X.rows.paths[yi];
            if (rp.front() != b) continue;
            Path y(rp.begin() + 1, rp.end());
            const std::size_t yj = yb.index.at(y);
            const int dy = yb.size_of(yj);
            for (std::size_t xi = 0; xi < xb.paths.size(); ++xi) {
                Path q = xb.paths[xi];
                q.push_back(b);
                const std::size_t ci = ib.index.at(q);
                const int dx = xb.size_of(xi);
                // input index: (x, k); output index: (k, y)
                for (int k = 0; k < db; ++k)
                    for (int a = 0; a < dy; ++a)
                        for (int c = 0; c < dx; ++c)
                            T(yb.offset[yj] + a, xb.offset[xi] + c) +=
                                X.M(X.rows.offset[yi] + k * dy + a, ib.offset[ci] + c * db + k);
            }
        }
        r.terms.emplace(Path{b}, DenseMap{yb, xb, T});
    }
    return r;
}

// ---------------------------------------------------------------------------
// Transfer operators
//
// An entry is indexed by two connecting arrows (from, to) and maps paths on
// the "in" side, running from side_in(from) to side_in(to), to paths on the
// "out" side running from side_out(from) to side_out(to).
//   Forward  (shape box, Hom(V^pi1, V^pi2)): in side = sources, out side = targets.
//            The conventional index (b1, b2) of f(b1, b2) is (to, from).
//   Backward (Hom(V^pi2, V^pi1)): in side = targets, out side = sources;
//            conventional (b1, b2) = (from, to).
//   End1/End2: endomorphisms of paths on the source/target side, produced by
//            composition; indexed (b_in, b_out), and every path of an entry
//            ends at side(to) where `to` was summed over.

struct TransferOperator {
    enum class Kind { Forward, Backward, End1, End2 };
    using Entry = std::map<std::pair<Path, Path>, Mat>;

    Kind kind = Kind::Forward;
    ConnectingSetPtr pi;
    Legs in_legs, out_legs;
    std::map<std::pair<std::size_t, std::size_t>, Entry> entries;

    bool in_is_source() const { return kind == Kind::Forward || kind == Kind::End1; }
    bool out_is_source() const { return kind == Kind::Backward || kind == Kind::End1; }
    std::size_t in_obj(std::size_t b) const { return in_is_source() ? pi->src(b) : pi->tgt(b); }
    std::size_t out_obj(std::size_t b) const { return out_is_source() ? pi->src(b) : pi->tgt(b); }
    bool is_end() const { return kind == Kind::End1 || kind == Kind::End2; }

    void add(std::size_t from, std::size_t to, const Path& in, const Path& out, const Mat& m) {
        auto& e = entries[{from, to}];
        auto it = e.find({in, out});
        if (it == e.end())
            e.emplace(std::make_pair(in, out), m);
        else
            it->second += m;
    }
    void add(std::size_t from, std::size_t to, const Path& in, const Path& out, cplx v) {
        add(from, to, in, out, Mat::Constant(1, 1, v));
    }
    const Entry* entry(std::size_t from, std::size_t to) const {
        auto it = entries.find({from, to});
        return it == entries.end() ? nullptr : &it->second;
    }
    cplx coefficient(std::size_t from, std::size_t to, const Path& in, const Path& out) const {
        auto e = entry(from, to);
        if (!e) return 0.0;
        auto it = e->find({in, out});
        return it == e->end() ? cplx(0.0) : it->second(0, 0);
    }
    double max_abs() const {
        double m = 0.0;
        for (auto& [_, e] : entries)
            for (auto& [__, x] : e) m = std::max(m, x.cwiseAbs().maxCoeff());
        return m;
    }
};

inline TransferOperator::Kind flipped(TransferOperator::Kind k) {
    using K = TransferOperator::Kind;
    return k == K::Forward ? K::Backward : K::Forward;
}

// f *_(x) g: entry(from, to) = sum_b f(from, b) (x) g(b, to), f's paths first.
inline TransferOperator transfer_fuse(const TransferOperator& f, const TransferOperator& g) {
    if (f.kind != g.kind || f.is_end()) throw grading_error("transfer_fuse: kind mismatch");
    if (f.pi != g.pi) throw grading_error("transfer_fuse: connecting set mismatch");
    TransferOperator r;
    r.kind = f.kind;
    r.pi = f.pi;
    r.in_legs = f.in_legs;
    r.in_legs.insert(r.in_legs.end(), g.in_legs.begin(), g.in_legs.end());
    r.out_legs = f.out_legs;
    r.out_legs.insert(r.out_legs.end(), g.out_legs.begin(), g.out_legs.end());
    std::map<std::size_t, std::vector<std::size_t>> g_from;
    for (auto& [k, _] : g.entries) g_from[k.first].push_back(k.second);
    for (auto& [k1, e1] : f.entries) {
        auto it = g_from.find(k1.second);
        if (it == g_from.end()) continue;
        for (auto to : it->second) {
            const auto& e2 = g.entries.at({k1.second, to});
            for (auto& [p1, m1] : e1)
                for (auto& [p2, m2] : e2) r.add(k1.first, to, concat(p1.first, p2.first), concat(p1.second, p2.second), kron(m1, m2));
        }
    }
    return r;
}

// outer *_o inner: inner's out paths feed outer's in paths; the result is
// indexed (b_in, b_out) and sums over the common `to` arrow.
inline TransferOperator transfer_compose(const TransferOperator& outer, const TransferOperator& inner) {
    using K = TransferOperator::Kind;
    if (outer.is_end() || inner.is_end() || outer.kind == inner.kind) throw grading_error("transfer_compose: kinds");
    if (!same_legs(inner.out_legs, outer.in_legs)) throw grading_error("transfer_compose: legs");
    TransferOperator r;
    r.kind = inner.kind == K::Forward ? K::End1 : K::End2;
    r.pi = inner.pi;
    r.in_legs = inner.in_legs;
    r.out_legs = outer.out_legs;
    std::map<std::size_t, std::vector<std::size_t>> outer_to;
    for (auto& [k, _] : outer.entries) outer_to[k.second].push_back(k.first);
    for (auto& [ki, ei] : inner.entries) {
        auto it = outer_to.find(ki.second);
        if (it == outer_to.end()) continue;
        for (auto bo : it->second) {
            const auto& eo = outer.entries.at({bo, ki.second});
            std::map<Path, std::vector<std::pair<Path, const Mat*>>> by_mid;
            for (auto& [p, m] : eo) by_mid[p.first].push_back({p.second, &m});
            for (auto& [p, mi] : ei) {
                auto jt = by_mid.find(p.second);
                if (jt == by_mid.end()) continue;
                for (auto& [o, mo] : jt->second) r.add(ki.first, bo, p.first, o, (*mo) * mi);
            }
        }
    }
    return r;
}

// Applies op to the out paths of T at legs [pos, pos+k).
inline TransferOperator post_apply(const BlockOperator& op, std::size_t pos, const TransferOperator& T) {
    const std::size_t k = op.dom().size();
    for (std::size_t i = 0; i < k; ++i)
        if (T.out_legs.at(pos + i).get() != op.dom()[i].get()) throw grading_error("post_apply: leg mismatch");
    TransferOperator r = T;
    r.entries.clear();
    r.out_legs.erase(r.out_legs.begin() + long(pos), r.out_legs.begin() + long(pos + k));
    r.out_legs.insert(r.out_legs.begin() + long(pos), op.cod().begin(), op.cod().end());
    for (auto& [key, e] : T.entries)
        for (auto& [pp, m] : e) {
            std::map<Path, Mat> acc;
            detail::apply_rows(op, pos, T.out_legs, pp.second, m, acc);
            for (auto& [np, nm] : acc) r.add(key.first, key.second, pp.first, np, nm);
        }
    return r;
}

// Left inverse g of f (g *_o f = delta id), solved per out-side object of the
// `from` arrow. Throws not_invertible when the block system is rank deficient.
inline TransferOperator transfer_left_inverse(const TransferOperator& f) {
    if (f.is_end()) throw grading_error("transfer_left_inverse: End kind");
    const auto& pi = *f.pi;
    // columns: (from, in path); rows: (to, out path)
    using Key = std::pair<std::size_t, Path>;
    std::map<std::size_t, std::pair<std::map<Key, int>, std::map<Key, int>>> groups;
    auto dim_in = [&](const Path& p) { return path_dim(f.in_legs, p); };
    auto dim_out = [&](const Path& p) { return path_dim(f.out_legs, p); };
    for (auto& [key, e] : f.entries)
        for (auto& [pp, m] : e) {
            if (m.cwiseAbs().maxCoeff() == 0.0) continue;
            auto& g = groups[f.out_obj(key.first)];
            g.first.emplace(Key{key.first, pp.first}, dim_in(pp.first));
            g.second.emplace(Key{key.second, pp.second}, dim_out(pp.second));
        }
    TransferOperator g;
    g.kind = flipped(f.kind);
    g.pi = f.pi;
    g.in_legs = f.out_legs;
    g.out_legs = f.in_legs;
    for (auto& [c, cr] : groups) {
        auto& [cols, rows] = cr;
        if (cols.empty()) continue;
        std::map<Key, int> co, ro;
        int nc = 0, nr = 0;
        for (auto& [k, d] : cols) co[k] = nc, nc += d;
        for (auto& [k, d] : rows) ro[k] = nr, nr += d;
        Mat Phi = Mat::Zero(nr, nc);
        for (auto& [k, d] : cols) {
            const auto& [from, p] = k;
            for (auto& [key, e] : f.entries) {
                if (key.first != from) continue;
                for (auto& [pp, m] : e)
                    if (pp.first == p) Phi.block(ro.at({key.second, pp.second}), co.at(k), m.rows(), m.cols()) += m;
            }
        }
        Eigen::JacobiSVD<Mat> svd(Phi, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        if (nr < nc || s.size() == 0 || s.minCoeff() <= inverse_rel_cutoff * s.maxCoeff())
            throw not_invertible("transfer operator not left invertible at object " + pi.right()->object_id(c));
        Mat Psi = svd.solve(Mat::Identity(nr, nr));
        for (auto& [kc, dc] : cols)
            for (auto& [kr, dr] : rows) {
                Mat blk = Psi.block(co.at(kc), ro.at(kr), dc, dr);
                if (blk.cwiseAbs().maxCoeff() == 0.0) continue;
                // g(from = kc.first, to = kr.first): in path kr.second -> out path kc.second
                g.add(kc.first, kr.first, kr.second, kc.second, blk);
            }
    }
    return g;
}

// Max deviation of an End operator from delta(b_in, b_out) * id on the paths
// it carries (a zero block along b means b transfers nothing there).
inline double deviation_from_identity(const TransferOperator& e) {
    if (!e.is_end()) throw grading_error("deviation_from_identity: expects End kind");
    double dev = 0.0;
    for (auto& [key, ent] : e.entries)
        for (auto& [pp, m] : ent) {
            Mat t = m;
            if (key.first == key.second && pp.first == pp.second) t -= Mat::Identity(m.rows(), m.cols());
            dev = std::max(dev, t.cwiseAbs().maxCoeff());
        }
    // diagonal entries that should be identity but are missing
    for (auto& [key, ent] : e.entries) {
        if (key.first != key.second) continue;
        std::set<Path> ins;
        for (auto& [pp, _] : ent) ins.insert(pp.first);
        for (auto& p : ins)
            if (!ent.count({p, p})) dev = std::max(dev, 1.0);
    }
    return dev;
}

struct InverseReport {
    TransferOperator inverse;
    double left_deviation = 0.0, right_deviation = 0.0;
    bool invertible(double tol = 1e-10) const { return left_deviation < tol && right_deviation < tol; }
};

// Left inverse, then both identities checked with the same operator.
inline InverseReport transfer_inverse(const TransferOperator& f) {
    InverseReport r{transfer_left_inverse(f), 0.0, 0.0};
    r.left_deviation = deviation_from_identity(transfer_compose(r.inverse, f));
    r.right_deviation = deviation_from_identity(transfer_compose(f, r.inverse));
    return r;
}

// End operator -> block operator on the out-side legs, reading the diagonal
// entry at the chosen arrow of every object.
inline BlockOperator triangle_down(const TransferOperator& e, const ConnectingSystem& sys) {
    if (e.kind != TransferOperator::Kind::End2) throw grading_error("triangle_down: expects End2");
    if (sys.pi != e.pi) throw grading_error("triangle_down: connecting system mismatch");
    BlockOperator r(e.in_legs, e.out_legs);
    for (std::size_t c = 0; c < sys.choice.size(); ++c) {
        auto ent = e.entry(sys.at(c), sys.at(c));
        if (!ent) continue;
        for (auto& [pp, m] : *ent) r.add(pp.first, pp.second, m);
    }
    return r;
}

// Block operator on target-side legs -> End2 operator with S on every
// diagonal entry (b, b), restricted to paths starting at t(b).
inline TransferOperator triangle_up(const BlockOperator& S, ConnectingSetPtr pi) {
    TransferOperator r;
    r.kind = TransferOperator::Kind::End2;
    r.pi = pi;
    r.in_legs = S.dom();
    r.out_legs = S.cod();
    for (std::size_t b = 0; b < pi->size(); ++b)
        for (auto& [in, row] : S.blocks()) {
            if (path_start(S.dom(), in).index != pi->tgt(b)) continue;
            for (auto& [out, m] : row) r.add(b, b, in, out, m);
        }
    return r;
}

// Matrix element of J in Hom(W1^n (x) V^pi, V^pi (x) W2^n) against the unit
// vectors of a Verma-type V^pi (all connecting dims one): a Forward transfer
// operator with entry(from = b_out, to = b_in)[alpha -> gamma].
inline TransferOperator matrix_element(const BlockOperator& J, ConnectingSetPtr pi) {
    const auto& d = J.dom();
    const auto& c = J.cod();
    if (!d.back()->connecting || d.back().get() != c.front().get()) throw grading_error("matrix_element: shape");
    for (auto x : d.back()->dim)
        if (x != 1) throw grading_error("matrix_element: V^pi is not of Verma type");
    TransferOperator r;
    r.kind = TransferOperator::Kind::Forward;
    r.pi = pi;
    r.in_legs.assign(d.begin(), d.end() - 1);
    r.out_legs.assign(c.begin() + 1, c.end());
    for (auto& [in, row] : J.blocks())
        for (auto& [out, m] : row)
            r.add(out.front(), in.back(), Path(in.begin(), in.end() - 1), Path(out.begin() + 1, out.end()), m);
    return r;
}

}  // namespace dynyb

#endif
