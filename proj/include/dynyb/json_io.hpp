// JSON readers and writers: groupoids, connecting sets, block operators,
// dense matrices, cell data and twist inputs. Complex numbers are [re, im];
// doubles are written in shortest round-trip form, so block operators
// survive a write/read cycle bit for bit.

#ifndef DYNYB_JSON_IO_HPP
#define DYNYB_JSON_IO_HPP

#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "graded.hpp"
#include "groupoid.hpp"
#include "twist.hpp"

namespace dynyb {

using json = nlohmann::ordered_json;

// Carries the JSON path of the offending field, e.g. "blocks[3].in[1]".
struct schema_error : std::runtime_error {
    std::string path;
    schema_error(std::string p, const std::string& msg) : std::runtime_error(p + ": " + msg), path(std::move(p)) {}
};

namespace detail {
inline const json& field(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw schema_error(path, "expected object");
    auto it = j.find(key);
    if (it == j.end()) throw schema_error(path + "." + key, "missing field");
    return *it;
}
inline const json& array_field(const json& j, const std::string& key, const std::string& path) {
    const json& a = field(j, key, path);
    if (!a.is_array()) throw schema_error(path + "." + key, "expected array");
    return a;
}
inline std::string string_at(const json& j, const std::string& path) {
    if (!j.is_string()) throw schema_error(path, "expected string");
    return j.get<std::string>();
}
inline std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }
}  // namespace detail

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j, const std::string& path = "$") {
    if (j.is_number()) return j.get<double>();
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) throw schema_error(path, "expected [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
        rows.push_back(row);
    }
    return rows;
}

inline Mat matrix_from_json(const json& j, const std::string& path = "$") {
    if (!j.is_array()) throw schema_error(path, "expected matrix");
    const std::size_t nr = j.size();
    const std::size_t nc = nr ? j[0].size() : 0;
    Mat m(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc));
    for (std::size_t r = 0; r < nr; ++r) {
        if (!j[r].is_array() || j[r].size() != nc) throw schema_error(detail::idx(path, r), "ragged matrix row");
        for (std::size_t c = 0; c < nc; ++c) m(Eigen::Index(r), Eigen::Index(c)) = complex_from_json(j[r][c], detail::idx(detail::idx(path, r), c));
    }
    return m;
}

// --- groupoids and connecting sets ------------------------------------------

inline json to_json(const Groupoid& g) {
    json j;
    j["name"] = g.name();
    json obj = json::array();
    for (std::size_t o = 0; o < g.num_objects(); ++o) obj.push_back(g.object_id(o));
    j["objects"] = obj;
    json arr = json::array();
    for (std::size_t a = 0; a < g.num_arrows(); ++a) {
        const Arrow& x = g.arrow(a);
        arr.push_back({{"id", x.id}, {"src", g.object_id(x.src)}, {"tgt", g.object_id(x.tgt)}, {"inv", g.arrow(x.inv).id}});
    }
    j["arrows"] = arr;
    return j;
}

// Reads into a free groupoid; self-inverse loops are taken as identities.
inline GroupoidPtr groupoid_from_json(const json& j, const std::string& path = "$") {
    std::string name = j.contains("name") ? detail::string_at(j["name"], path + ".name") : "groupoid";
    std::vector<std::string> objects;
    const json& obj = detail::array_field(j, "objects", path);
    for (std::size_t i = 0; i < obj.size(); ++i) objects.push_back(detail::string_at(obj[i], detail::idx(path + ".objects", i)));
    std::vector<std::tuple<std::string, std::string, std::string, std::string>> arrows;
    const json& arr = detail::array_field(j, "arrows", path);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = detail::idx(path + ".arrows", i);
        arrows.emplace_back(detail::string_at(detail::field(arr[i], "id", p), p + ".id"), detail::string_at(detail::field(arr[i], "src", p), p + ".src"),
                            detail::string_at(detail::field(arr[i], "tgt", p), p + ".tgt"), detail::string_at(detail::field(arr[i], "inv", p), p + ".inv"));
    }
    try {
        return std::make_shared<const Groupoid>(Groupoid::from_arrows(name, objects, arrows));
    } catch (const std::exception& e) {
        throw schema_error(path, e.what());
    }
}

inline json to_json(const ConnectingSet& pi) {
    json j;
    j["src_groupoid"] = pi.left()->name();
    j["tgt_groupoid"] = pi.right()->name();
    json arr = json::array();
    for (std::size_t i = 0; i < pi.size(); ++i)
        arr.push_back({{"id", pi.arrow(i).id}, {"src", pi.left()->object_id(pi.src(i))}, {"tgt", pi.right()->object_id(pi.tgt(i))}});
    j["arrows"] = arr;
    return j;
}

inline ConnectingSetPtr connecting_from_json(const json& j, GroupoidPtr left, GroupoidPtr right, const std::string& path = "$") {
    auto pi = std::make_shared<ConnectingSet>(left, right);
    const json& arr = detail::array_field(j, "arrows", path);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = detail::idx(path + ".arrows", i);
        try {
            std::string id = arr[i].contains("id") ? detail::string_at(arr[i]["id"], p + ".id") : std::string{};
            pi->add(left->object(detail::string_at(detail::field(arr[i], "src", p), p + ".src")),
                    right->object(detail::string_at(detail::field(arr[i], "tgt", p), p + ".tgt")), id);
        } catch (const std::out_of_range& e) {
            throw schema_error(p, e.what());
        }
    }
    return pi;
}

// --- block operators ----------------------------------------------------------

inline json to_json(const BlockOperator& op) {
    json j;
    json dom = json::array(), cod = json::array();
    for (auto& l : op.dom()) dom.push_back(l->name);
    for (auto& l : op.cod()) cod.push_back(l->name);
    j["domain"] = dom;
    j["codomain"] = cod;
    json blocks = json::array();
    for (auto& [in, row] : op.blocks())
        for (auto& [out, m] : row) {
            json b;
            json ji = json::array(), jo = json::array();
            for (std::size_t k = 0; k < in.size(); ++k) ji.push_back(op.dom()[k]->ids[in[k]]);
            for (std::size_t k = 0; k < out.size(); ++k) jo.push_back(op.cod()[k]->ids[out[k]]);
            b["in"] = ji;
            b["out"] = jo;
            b["mat"] = matrix_to_json(m);
            blocks.push_back(b);
        }
    j["blocks"] = blocks;
    return j;
}

// Legs are looked up by name in `spaces`.
inline BlockOperator block_from_json(const json& j, const std::map<std::string, LegPtr>& spaces, const std::string& path = "$") {
    auto legs = [&](const char* key) {
        Legs r;
        const json& a = detail::array_field(j, key, path);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string p = detail::idx(path + "." + key, i);
            auto it = spaces.find(detail::string_at(a[i], p));
            if (it == spaces.end()) throw schema_error(p, "unknown space " + a[i].get<std::string>());
            r.push_back(it->second);
        }
        if (r.empty()) throw schema_error(path + "." + key, "no legs");
        return r;
    };
    Legs dom = legs("domain"), cod = legs("codomain");
    BlockOperator op(dom, cod);
    const json& blocks = detail::array_field(j, "blocks", path);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const std::string p = detail::idx(path + ".blocks", i);
        auto read_path = [&](const char* key, const Legs& L) {
            const json& a = detail::array_field(blocks[i], key, p);
            if (a.size() != L.size()) throw schema_error(p + "." + key, "path length " + std::to_string(a.size()) + " != " + std::to_string(L.size()));
            Path r;
            for (std::size_t k = 0; k < a.size(); ++k) {
                const std::string pk = detail::idx(p + "." + key, k);
                try {
                    r.push_back(L[k]->index(detail::string_at(a[k], pk)));
                } catch (const std::out_of_range& e) {
                    throw schema_error(pk, e.what());
                }
            }
            return r;
        };
        Path in = read_path("in", dom), out = read_path("out", cod);
        Mat m = matrix_from_json(detail::field(blocks[i], "mat", p), p + ".mat");
        try {
            op.add(in, out, m);
        } catch (const grading_error& e) {
            throw schema_error(p, e.what());
        }
    }
    return op;
}

// Source-fiber matrix of an operator in the sorted path basis.
inline json fiber_to_json(const DenseMap& X) {
    json j;
    auto names = [](const Basis& b) {
        json a = json::array();
        for (auto& p : b.paths) a.push_back(describe(b.legs, p));
        return a;
    };
    j["rows"] = names(X.rows);
    j["cols"] = names(X.cols);
    j["mat"] = matrix_to_json(X.M);
    return j;
}

// --- cells ----------------------------------------------------------------------

inline json to_json(const CellData& cd) {
    json j;
    j["A"] = to_json(*cd.A);
    j["D"] = to_json(*cd.D);
    j["connecting"] = to_json(*cd.pi);
    j["provenance"] = cd.provenance;
    json cells = json::array();
    for (auto& [k, c] : cd.cells)
        cells.push_back({{"a1", cd.A->object_id(k[0])},
                         {"a2", cd.A->object_id(k[1])},
                         {"e1", cd.D->object_id(k[2])},
                         {"e2", cd.D->object_id(k[3])},
                         {"value", to_json(c.value)},
                         {"inverse", to_json(c.inverse)},
                         {"flagged", c.flagged}});
    j["cells"] = cells;
    return j;
}

// Groupoids and the connecting set come from the file unless `base` is
// given, in which case only the "cells" list is read and placed on base's
// graphs. A missing "inverse" defaults to the value.
inline CellData cells_from_json(const json& j, const CellData* base = nullptr, const std::string& path = "$") {
    CellData cd;
    if (base) {
        cd = *base;
        cd.cells.clear();
    } else {
        cd.A = groupoid_from_json(detail::field(j, "A", path), path + ".A");
        cd.D = groupoid_from_json(detail::field(j, "D", path), path + ".D");
        cd.pi = connecting_from_json(detail::field(j, "connecting", path), cd.A, cd.D, path + ".connecting");
        cd.legA = steps_leg(cd.A, "VA");
        cd.legD = steps_leg(cd.D, "V" + cd.D->name());
    }
    if (j.contains("provenance")) cd.provenance = detail::string_at(j["provenance"], path + ".provenance");
    const json& cells = detail::array_field(j, "cells", path);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::string p = detail::idx(path + ".cells", i);
        const json& c = cells[i];
        CellKey k;
        try {
            k = cd.key(detail::string_at(detail::field(c, "a1", p), p + ".a1"), detail::string_at(detail::field(c, "a2", p), p + ".a2"),
                       detail::string_at(detail::field(c, "e1", p), p + ".e1"), detail::string_at(detail::field(c, "e2", p), p + ".e2"));
            cd.arrowA(k[0], k[1]);
            cd.arrowD(k[2], k[3]);
            cd.beta(k[0], k[2]);
            cd.beta(k[1], k[3]);
        } catch (const std::out_of_range& e) {
            throw schema_error(p, e.what());
        }
        Cell cell;
        cell.value = complex_from_json(detail::field(c, "value", p), p + ".value");
        cell.inverse = c.contains("inverse") ? complex_from_json(c["inverse"], p + ".inverse") : cell.value;
        if (c.contains("flagged")) {
            if (!c["flagged"].is_boolean()) throw schema_error(p + ".flagged", "expected bool");
            cell.flagged = c["flagged"].get<bool>();
        }
        cd.cells[k] = cell;
    }
    return cd;
}

// --- twist inputs -----------------------------------------------------------------

// {"R": mat, "J": mat, "Q": mat}
inline std::pair<Mat, StaticTwistPair> static_twist_from_json(const json& j, const std::string& path = "$") {
    return {matrix_from_json(detail::field(j, "R", path), path + ".R"),
            StaticTwistPair{matrix_from_json(detail::field(j, "J", path), path + ".J"), matrix_from_json(detail::field(j, "Q", path), path + ".Q")}};
}

// {"dim", "weights", "R", "lmin", "lmax", "J": {"<lambda>": mat}, "Q": {...}}
inline DynamicalTwistData dynamical_twist_from_json(const json& j, const std::string& path = "$") {
    DynamicalTwistData t;
    auto integer = [&](const char* key) {
        const json& v = detail::field(j, key, path);
        if (!v.is_number_integer()) throw schema_error(path + "." + key, "expected integer");
        return v.get<int>();
    };
    t.dim = integer("dim");
    t.lmin = integer("lmin");
    t.lmax = integer("lmax");
    const json& w = detail::array_field(j, "weights", path);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!w[i].is_number_integer()) throw schema_error(detail::idx(path + ".weights", i), "expected integer");
        t.weights.push_back(w[i].get<int>());
    }
    t.R = matrix_from_json(detail::field(j, "R", path), path + ".R");
    auto table = [&](const char* key, std::map<int, Mat>& out) {
        const json& m = detail::field(j, key, path);
        if (!m.is_object()) throw schema_error(path + "." + key, "expected object keyed by base object");
        for (auto it = m.begin(); it != m.end(); ++it) {
            const std::string p = path + "." + key + "." + it.key();
            int l;
            try {
                std::size_t used = 0;
                l = std::stoi(it.key(), &used);
                if (used != it.key().size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw schema_error(p, "base object key must be an integer");
            }
            out[l] = matrix_from_json(it.value(), p);
        }
    };
    table("J", t.J);
    table("Q", t.Q);
    return t;
}

inline json read_json_file(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw schema_error(file, e.what());
    }
}

inline void write_json_file(const std::string& file, const json& j) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file);
    out << j.dump(2) << "\n";
}

}  // namespace dynyb

#endif
