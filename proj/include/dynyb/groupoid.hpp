// Finite groupoids, connecting sets between them, and connecting systems.
//
// Two storage kinds:
//  * Table: every arrow is materialized and composition is a lookup
//    (finite groups, windows of the action groupoid (Z+b) x| Z).
//  * Free: only generators and identities are stored (graph groupoids);
//    a path is classified by its freely reduced word.

#ifndef DYNYB_GROUPOID_HPP
#define DYNYB_GROUPOID_HPP

#include <algorithm>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "elliptic.hpp"

namespace dynyb {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

struct not_composable : std::logic_error {
    using std::logic_error::logic_error;
};
struct incidence_violation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Arrow {
    std::string id;
    std::size_t src = 0, tgt = 0, inv = 0;
    bool generator = false;
};

class Groupoid {
public:
    enum class Kind { Table, Free };

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    std::size_t num_objects() const { return objects_.size(); }
    std::size_t num_arrows() const { return arrows_.size(); }
    const std::string& object_id(std::size_t o) const { return objects_.at(o); }
    cplx object_value(std::size_t o) const { return values_.at(o); }
    const Arrow& arrow(std::size_t a) const { return arrows_.at(a); }
    std::size_t identity(std::size_t o) const { return identity_.at(o); }
    bool is_identity(std::size_t a) const { return identity_.at(arrows_.at(a).src) == a; }
    std::size_t src(std::size_t a) const { return arrows_.at(a).src; }
    std::size_t tgt(std::size_t a) const { return arrows_.at(a).tgt; }
    std::size_t inverse(std::size_t a) const { return arrows_.at(a).inv; }

    std::size_t object(const std::string& id) const {
        auto it = obj_index_.find(id);
        if (it == obj_index_.end()) throw std::out_of_range("unknown object " + id);
        return it->second;
    }
    std::size_t arrow_index(const std::string& id) const {
        auto it = arrow_index_.find(id);
        if (it == arrow_index_.end()) throw std::out_of_range("unknown arrow " + id);
        return it->second;
    }
    bool has_arrow(const std::string& id) const { return arrow_index_.count(id) > 0; }

    // Distance to the edge of a finite window cut out of an infinite groupoid.
    // Closed groupoids report a large depth everywhere.
    int window_depth(std::size_t o) const {
        return depth_.empty() ? std::numeric_limits<int>::max() / 2 : depth_.at(o);
    }
    bool truncated() const { return !depth_.empty(); }

    // "alpha then beta", i.e. beta o alpha.
    std::size_t compose(std::size_t a, std::size_t b) const {
        if (tgt(a) != src(b)) throw not_composable(arrow(a).id + " then " + arrow(b).id);
        if (is_identity(a)) return b;
        if (is_identity(b)) return a;
        if (kind_ == Kind::Table) {
            auto it = table_.find({a, b});
            if (it == table_.end()) throw not_composable("missing table entry");
            return it->second;
        }
        if (inverse(a) == b) return identity(src(a));
        throw not_composable("composite " + arrow(a).id + " then " + arrow(b).id + " is not materialized");
    }

    std::vector<std::size_t> source_fiber(std::size_t o) const {
        std::vector<std::size_t> r;
        for (std::size_t a = 0; a < arrows_.size(); ++a)
            if (arrows_[a].src == o) r.push_back(a);
        return r;
    }
    std::vector<std::size_t> target_fiber(std::size_t o) const {
        std::vector<std::size_t> r;
        for (std::size_t a = 0; a < arrows_.size(); ++a)
            if (arrows_[a].tgt == o) r.push_back(a);
        return r;
    }

    // Canonical representative of the composite of a path: the composite
    // arrow (Table) or the reduced word (Free). Identities are dropped; an
    // empty word stands for the identity at `start`.
    std::vector<std::size_t> word_class(std::size_t start, const std::vector<std::size_t>& path) const {
        std::vector<std::size_t> w;
        if (kind_ == Kind::Table) {
            std::size_t acc = identity(start);
            for (auto a : path) acc = compose(acc, a);
            if (!is_identity(acc)) w.push_back(acc);
            return w;
        }
        for (auto a : path) {
            if (is_identity(a)) continue;
            if (!w.empty() && inverse(w.back()) == a)
                w.pop_back();
            else
                w.push_back(a);
        }
        return w;
    }

    // Adjacency counts of generating arrows.
    std::vector<std::vector<long>> adjacency() const {
        std::vector<std::vector<long>> m(num_objects(), std::vector<long>(num_objects(), 0));
        for (auto& a : arrows_)
            if (a.generator) ++m[a.src][a.tgt];
        return m;
    }

    std::size_t num_generators() const {
        return std::size_t(std::count_if(arrows_.begin(), arrows_.end(), [](const Arrow& a) { return a.generator; }));
    }

    // --- constructors -------------------------------------------------------

    // Undirected edges between named objects; two opposite generators per edge.
    static Groupoid graph(const std::string& name, const std::vector<std::string>& objects,
                          const std::vector<std::pair<std::string, std::string>>& edges) {
        Groupoid g;
        g.kind_ = Kind::Free;
        g.name_ = name;
        for (auto& o : objects) g.add_object(o, cplx(double(g.objects_.size() + 1)));
        std::set<std::pair<std::string, std::string>> seen;
        for (auto& [u, v] : edges) {
            if (!seen.insert({u, v}).second || !seen.insert({v, u}).second)
                throw std::invalid_argument("duplicate edge " + u + "-" + v);
            std::size_t a = g.add_arrow(u + ">" + v, g.object(u), g.object(v), true);
            std::size_t b = g.add_arrow(v + ">" + u, g.object(v), g.object(u), true);
            g.arrows_[a].inv = b;
            g.arrows_[b].inv = a;
        }
        return g;
    }

    // Path graph on objects 1..n.
    static Groupoid chain(const std::string& name, int n) {
        std::vector<std::string> obj;
        std::vector<std::pair<std::string, std::string>> e;
        for (int i = 1; i <= n; ++i) obj.push_back(std::to_string(i));
        for (int i = 1; i < n; ++i) e.push_back({std::to_string(i), std::to_string(i + 1)});
        return graph(name, obj, e);
    }

    // Full subgroupoid of (Z+b) x| Z on {k+b : kmin <= k <= kmax}. All arrows
    // k -> k+g are materialized; the +-1 steps are the generators. Per object
    // the order is: identity, +1, -1, then the remaining shifts.
    static Groupoid action_window(cplx b, int kmin, int kmax, bool truncated = true) {
        if (kmax < kmin) throw std::invalid_argument("empty window");
        Groupoid g;
        g.kind_ = Kind::Table;
        g.name_ = "action";
        for (int k = kmin; k <= kmax; ++k) {
            g.add_object(std::to_string(k), double(k) + b);
            if (truncated) g.depth_.push_back(std::min(k - kmin, kmax - k));
        }
        auto name = [](int k, int l) { return std::to_string(k) + ">" + std::to_string(l); };
        std::map<std::pair<int, int>, std::size_t> idx;
        for (int k = kmin; k <= kmax; ++k) {
            std::size_t o = std::size_t(k - kmin);
            idx[{k, k}] = g.identity_[o];
            std::vector<int> order;
            if (k + 1 <= kmax) order.push_back(k + 1);
            if (k - 1 >= kmin) order.push_back(k - 1);
            for (int l = kmin; l <= kmax; ++l)
                if (std::abs(l - k) > 1) order.push_back(l);
            for (int l : order)
                idx[{k, l}] = g.add_arrow(name(k, l), o, std::size_t(l - kmin), std::abs(l - k) == 1);
        }
        for (auto& [kl, a] : idx) g.arrows_[a].inv = idx.at({kl.second, kl.first});
        for (int k = kmin; k <= kmax; ++k)
            for (int l = kmin; l <= kmax; ++l)
                for (int m = kmin; m <= kmax; ++m) g.table_[{idx.at({k, l}), idx.at({l, m})}] = idx.at({k, m});
        return g;
    }

    static Groupoid action_window_centered(cplx b, int N) { return action_window(b, -N, N, true); }

    // One-object groupoid of a finite group given by its multiplication table
    // mult[i][j] = index of "i then j"; element 0 must be the unit.
    static Groupoid group(const std::string& name, const std::string& object,
                          const std::vector<std::string>& elements,
                          const std::vector<std::vector<std::size_t>>& mult) {
        Groupoid g;
        g.kind_ = Kind::Table;
        g.name_ = name;
        g.objects_.push_back(object);
        g.values_.push_back(0.0);
        g.obj_index_[object] = 0;
        for (std::size_t i = 0; i < elements.size(); ++i) {
            Arrow a{elements[i], 0, 0, 0, i != 0};
            g.arrow_index_[a.id] = g.arrows_.size();
            g.arrows_.push_back(a);
        }
        g.identity_.push_back(0);
        for (std::size_t i = 0; i < elements.size(); ++i)
            for (std::size_t j = 0; j < elements.size(); ++j) {
                g.table_[{i, j}] = mult[i][j];
                if (mult[i][j] == 0) g.arrows_[i].inv = j;
            }
        return g;
    }

    // Z/2 on one object: "+" is the unit, "-" squares to it.
    static Groupoid z2(const std::string& object = "v") {
        return group("Z2", object, {"+", "-"}, {{0, 1}, {1, 0}});
    }

    static Groupoid point(const std::string& object = "*", const std::string& arrow = "e") {
        return group("point", object, {arrow}, {{0}});
    }

    // Generic builder used by the JSON reader: arrows with explicit inverses,
    // identities recognized as self-inverse loops named in `identities`.
    static Groupoid from_arrows(const std::string& name, const std::vector<std::string>& objects,
                                const std::vector<std::tuple<std::string, std::string, std::string, std::string>>& arrows) {
        Groupoid g;
        g.kind_ = Kind::Free;
        g.name_ = name;
        for (auto& o : objects) {
            g.objects_.push_back(o);
            g.values_.push_back(double(g.objects_.size()));
            g.obj_index_[o] = g.objects_.size() - 1;
            g.identity_.push_back(npos);
        }
        for (auto& [id, s, t, inv] : arrows) {
            Arrow a{id, g.object(s), g.object(t), 0, false};
            g.arrow_index_[id] = g.arrows_.size();
            g.arrows_.push_back(a);
        }
        for (std::size_t i = 0; i < arrows.size(); ++i) {
            auto& inv = std::get<3>(arrows[i]);
            g.arrows_[i].inv = g.arrow_index(inv);
            auto& a = g.arrows_[i];
            if (a.src == a.tgt && a.inv == i && g.identity_[a.src] == npos)
                g.identity_[a.src] = i;
            else
                a.generator = true;
        }
        for (std::size_t o = 0; o < g.objects_.size(); ++o)
            if (g.identity_[o] == npos) throw std::invalid_argument("object without identity: " + g.objects_[o]);
        return g;
    }

private:
    std::size_t add_object(const std::string& id, cplx value) {
        if (obj_index_.count(id)) throw std::invalid_argument("duplicate object " + id);
        std::size_t o = objects_.size();
        objects_.push_back(id);
        values_.push_back(value);
        obj_index_[id] = o;
        std::size_t e = arrows_.size();
        arrows_.push_back(Arrow{"1_" + id, o, o, e, false});
        arrow_index_[arrows_.back().id] = e;
        identity_.push_back(e);
        return o;
    }
    std::size_t add_arrow(const std::string& id, std::size_t s, std::size_t t, bool gen) {
        if (arrow_index_.count(id)) throw std::invalid_argument("duplicate arrow " + id);
        arrows_.push_back(Arrow{id, s, t, 0, gen});
        arrow_index_[id] = arrows_.size() - 1;
        return arrows_.size() - 1;
    }

    Kind kind_ = Kind::Free;
    std::string name_;
    std::vector<std::string> objects_;
    std::vector<cplx> values_;
    std::vector<Arrow> arrows_;
    std::vector<std::size_t> identity_;
    std::vector<int> depth_;
    std::unordered_map<std::string, std::size_t> obj_index_, arrow_index_;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> table_;
};

using GroupoidPtr = std::shared_ptr<const Groupoid>;

// Arrows from objects of `left` to objects of `right`.
struct ConnectingArrow {
    std::string id;
    std::size_t src = 0, tgt = 0;
};

class ConnectingSet {
public:
    ConnectingSet(GroupoidPtr left, GroupoidPtr right) : left_(std::move(left)), right_(std::move(right)) {}

    const GroupoidPtr& left() const { return left_; }
    const GroupoidPtr& right() const { return right_; }
    std::size_t size() const { return arrows_.size(); }
    const ConnectingArrow& arrow(std::size_t i) const { return arrows_.at(i); }
    std::size_t src(std::size_t i) const { return arrows_.at(i).src; }
    std::size_t tgt(std::size_t i) const { return arrows_.at(i).tgt; }

    std::size_t add(std::size_t s, std::size_t t, std::string id = {}) {
        if (id.empty()) {
            id = left_->object_id(s) + ">" + right_->object_id(t);
            int k = 1;
            while (index_.count(id)) id = left_->object_id(s) + ">" + right_->object_id(t) + "#" + std::to_string(++k);
        }
        index_[id] = arrows_.size();
        arrows_.push_back({id, s, t});
        return arrows_.size() - 1;
    }
    std::size_t index(const std::string& id) const { return index_.at(id); }

    std::vector<std::size_t> from(std::size_t a) const {
        std::vector<std::size_t> r;
        for (std::size_t i = 0; i < arrows_.size(); ++i)
            if (arrows_[i].src == a) r.push_back(i);
        return r;
    }
    std::vector<std::size_t> into(std::size_t c) const {
        std::vector<std::size_t> r;
        for (std::size_t i = 0; i < arrows_.size(); ++i)
            if (arrows_[i].tgt == c) r.push_back(i);
        return r;
    }
    std::size_t find(std::size_t s, std::size_t t) const {
        for (std::size_t i = 0; i < arrows_.size(); ++i)
            if (arrows_[i].src == s && arrows_[i].tgt == t) return i;
        return npos;
    }
    bool has_multi_edges() const {
        std::set<std::pair<std::size_t, std::size_t>> s;
        for (auto& a : arrows_)
            if (!s.insert({a.src, a.tgt}).second) return true;
        return false;
    }
    bool surjective() const {
        std::set<std::size_t> s, t;
        for (auto& a : arrows_) {
            s.insert(a.src);
            t.insert(a.tgt);
        }
        return s.size() == left_->num_objects() && t.size() == right_->num_objects();
    }

    // Incidence matrix with C_ij arrows i -> j. Checks M1 C = C M2, the star
    // condition C_{*1,i} = 1 iff i = *2, and that every row is nonzero.
    static ConnectingSet from_incidence(const std::vector<std::vector<long>>& C, GroupoidPtr l, GroupoidPtr r,
                                        std::size_t star1, std::size_t star2) {
        const std::size_t n1 = l->num_objects(), n2 = r->num_objects();
        if (C.size() != n1) throw incidence_violation("shape: rows");
        for (auto& row : C)
            if (row.size() != n2) throw incidence_violation("shape: columns");
        auto M1 = l->adjacency(), M2 = r->adjacency();
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j) {
                long a = 0, b = 0;
                for (std::size_t k = 0; k < n1; ++k) a += M1[i][k] * C[k][j];
                for (std::size_t k = 0; k < n2; ++k) b += C[i][k] * M2[k][j];
                if (a != b)
                    throw incidence_violation("M1 C != C M2 at (" + l->object_id(i) + "," + r->object_id(j) + ")");
            }
        for (std::size_t j = 0; j < n2; ++j)
            if ((C[star1][j] == 1) != (j == star2)) throw incidence_violation("star condition");
        for (std::size_t i = 0; i < n1; ++i) {
            long s = 0;
            for (auto v : C[i]) {
                if (v < 0) throw incidence_violation("negative entry");
                s += v;
            }
            if (s == 0) throw incidence_violation("zero row " + l->object_id(i));
        }
        ConnectingSet cs(l, r);
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j)
                for (long k = 0; k < C[i][j]; ++k) cs.add(i, j);
        return cs;
    }

    // Identity-like connecting set between two groupoids with the same object ids.
    static ConnectingSet diagonal(GroupoidPtr l, GroupoidPtr r) {
        ConnectingSet cs(l, r);
        for (std::size_t o = 0; o < l->num_objects(); ++o) cs.add(o, r->object(l->object_id(o)));
        return cs;
    }

private:
    GroupoidPtr left_, right_;
    std::vector<ConnectingArrow> arrows_;
    std::unordered_map<std::string, std::size_t> index_;
};

using ConnectingSetPtr = std::shared_ptr<const ConnectingSet>;

enum class Flavor { unique, quasi_unique, general };

inline const char* to_string(Flavor f) {
    switch (f) {
        case Flavor::unique: return "unique";
        case Flavor::quasi_unique: return "quasi-unique";
        default: return "general";
    }
}

// A chosen connecting arrow per object of the right groupoid.
struct ConnectingSystem {
    ConnectingSetPtr pi;
    std::vector<std::size_t> choice;  // right object -> connecting arrow

    std::size_t at(std::size_t c) const { return choice.at(c); }

    void validate() const {
        if (choice.size() != pi->right()->num_objects()) throw std::invalid_argument("connecting system: size");
        for (std::size_t c = 0; c < choice.size(); ++c)
            if (choice[c] >= pi->size() || pi->tgt(choice[c]) != c)
                throw std::invalid_argument("connecting system: bad choice at " + pi->right()->object_id(c));
    }

    // Prefers arrows whose source emits nothing else; ties broken by index.
    static ConnectingSystem anchored(ConnectingSetPtr pi) {
        ConnectingSystem s{pi, {}};
        for (std::size_t c = 0; c < pi->right()->num_objects(); ++c) {
            auto in = pi->into(c);
            if (in.empty()) throw std::invalid_argument("connecting set not surjective");
            std::size_t pick = in.front();
            for (auto b : in)
                if (pi->from(pi->src(b)).size() == 1) {
                    pick = b;
                    break;
                }
            s.choice.push_back(pick);
        }
        return s;
    }
};

// unique: every chosen arrow is the only one leaving its source.
// quasi-unique: every right object is reached by one generating step (or
// none) from an object whose chosen arrow is unique in that sense.
inline Flavor classify_connecting_system(const ConnectingSystem& s) {
    s.validate();
    const auto& pi = *s.pi;
    auto lonely = [&](std::size_t b) { return pi.from(pi.src(b)).size() == 1; };
    bool all = true;
    for (auto b : s.choice) all = all && lonely(b);
    if (all) return Flavor::unique;
    const auto& R = *pi.right();
    for (std::size_t c = 0; c < R.num_objects(); ++c) {
        if (lonely(s.at(c))) continue;
        bool ok = false;
        for (auto a : R.target_fiber(c))
            if (R.arrow(a).generator && lonely(s.at(R.src(a)))) ok = true;
        if (!ok) return Flavor::general;
    }
    return Flavor::quasi_unique;
}

}  // namespace dynyb

#endif
