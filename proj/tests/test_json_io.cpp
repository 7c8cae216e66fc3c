#include <gtest/gtest.h>

#include <filesystem>

#include <dynyb/json_io.hpp>
#include <dynyb/suites.hpp>

using namespace dynyb;

namespace {

std::string temp_file(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

std::string schema_path(const std::function<void()>& f) {
    try {
        f();
    } catch (const schema_error& e) {
        return e.path;
    }
    return "<no error>";
}

}  // namespace

TEST(JsonIo, ComplexAndMatrix) {
    EXPECT_EQ(complex_from_json(json::parse("[1.5, -2]")), cplx(1.5, -2.0));
    EXPECT_EQ(complex_from_json(json::parse("3")), cplx(3.0));
    EXPECT_THROW(complex_from_json(json::parse("[1, 2, 3]")), schema_error);
    Mat m(2, 3);
    m << cplx(1, 2), 0.1, -3, cplx(0, 1e-300), 7, cplx(1.0 / 3.0, -2.0 / 7.0);
    Mat back = matrix_from_json(json::parse(matrix_to_json(m).dump()));
    EXPECT_EQ((back - m).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(schema_path([] { matrix_from_json(json::parse("[[1, 2], [3]]"), "$.J"); }), "$.J[1]");
}

TEST(JsonIo, BlockOperatorRoundTripIsBitExact) {
    SosParams P;
    auto R = build_rsos(P);
    auto op = R(cplx(0.3141, 0.0271));
    const std::string text = to_json(op).dump();
    auto back = block_from_json(json::parse(text), {{R.leg->name, R.leg}});
    std::size_t n = 0;
    for (auto& [in, row] : op.blocks())
        for (auto& [out, m] : row) {
            EXPECT_EQ(back.coefficient(in, out), m(0, 0));
            ++n;
        }
    for (auto& [in, row] : back.blocks()) EXPECT_EQ(row.size(), op.outputs(in)->size());
    EXPECT_GT(n, 50u);
    EXPECT_EQ(to_json(back).dump(), text);
}

TEST(JsonIo, MalformedBlockNamesThePath) {
    SosParams P;
    auto R = build_rsos(P);
    json j = to_json(R(0.3));
    j["blocks"][3]["in"][0] = "nope";
    const std::map<std::string, LegPtr> spaces{{R.leg->name, R.leg}};
    EXPECT_EQ(schema_path([&] { block_from_json(j, spaces); }), "$.blocks[3].in[0]");
    try {
        block_from_json(j, spaces);
    } catch (const schema_error& e) {
        EXPECT_NE(std::string(e.what()).find("unknown arrow nope"), std::string::npos);
    }
    json k = to_json(R(0.3));
    k["blocks"][2]["out"] = k["blocks"][40]["out"];
    EXPECT_EQ(schema_path([&] { block_from_json(k, spaces); }), "$.blocks[2]");
    json m = to_json(R(0.3));
    m["domain"][1] = "W";
    EXPECT_EQ(schema_path([&] { block_from_json(m, spaces); }), "$.domain[1]");
    json n = to_json(R(0.3));
    n["blocks"][0].erase("mat");
    EXPECT_EQ(schema_path([&] { block_from_json(n, spaces); }), "$.blocks[0].mat");
}

TEST(JsonIo, GroupoidRoundTrip) {
    auto g = Groupoid::chain("A5", 5);
    auto back = groupoid_from_json(json::parse(to_json(g).dump()));
    EXPECT_EQ(back->num_objects(), g.num_objects());
    EXPECT_EQ(back->num_arrows(), g.num_arrows());
    EXPECT_EQ(back->name(), "A5");
    for (std::size_t a = 0; a < g.num_arrows(); ++a) {
        const auto& x = g.arrow(a);
        const auto b = back->arrow_index(x.id);
        EXPECT_EQ(back->object_id(back->arrow(b).src), g.object_id(x.src));
        EXPECT_EQ(back->arrow(back->arrow(b).inv).id, g.arrow(x.inv).id);
    }
    json bad = to_json(g);
    bad["arrows"][1].erase("tgt");
    EXPECT_EQ(schema_path([&] { groupoid_from_json(bad); }), "$.arrows[1].tgt");
}

TEST(JsonIo, CellDataRoundTripThroughFile) {
    AParams P;
    P.theta.L = 5;
    auto R = build_elliptic_A(P);
    auto cd = build_AD_cells(5, R.leg);
    const auto file = temp_file("dynyb_cells_test.json");
    write_json_file(file, to_json(cd));
    auto back = cells_from_json(read_json_file(file));
    std::filesystem::remove(file);
    ASSERT_EQ(back.cells.size(), cd.cells.size());
    for (auto& [k, c] : cd.cells) {
        EXPECT_EQ(back.cells.at(k).value, c.value);
        EXPECT_EQ(back.cells.at(k).inverse, c.inverse);
    }
    EXPECT_EQ(back.provenance, cd.provenance);
    auto R2 = build_elliptic_A(P, back.A);
    back.legA = R2.leg;
    EXPECT_TRUE(check_cell_twist(back, R2, cplx(0.31, 0.05), 1e-8).pass());
}

TEST(JsonIo, CellsOnBaseAndErrors) {
    auto cd = build_E6_cells();
    json j = to_json(cd);
    j["cells"][0].erase("inverse");
    auto back = cells_from_json(j, &cd);
    EXPECT_EQ(back.cells.size(), cd.cells.size());
    EXPECT_EQ(back.A.get(), cd.A.get());
    j["cells"][5]["a2"] = "9";
    EXPECT_EQ(schema_path([&] { cells_from_json(j, &cd); }), "$.cells[5]");
    json f = to_json(cd);
    f["cells"][2]["flagged"] = 1;
    EXPECT_EQ(schema_path([&] { cells_from_json(f, &cd); }), "$.cells[2].flagged");
}

TEST(JsonIo, DynamicalTwistParse) {
    auto t = dynamical_twist_example(-2, 2);
    json j;
    j["dim"] = t.dim;
    j["weights"] = t.weights;
    j["R"] = matrix_to_json(t.R);
    j["lmin"] = t.lmin;
    j["lmax"] = t.lmax;
    for (auto& [l, m] : t.J) j["J"][std::to_string(l)] = matrix_to_json(m);
    for (auto& [l, m] : t.Q) j["Q"][std::to_string(l)] = matrix_to_json(m);
    auto back = dynamical_twist_from_json(json::parse(j.dump()));
    EXPECT_EQ(back.weights, t.weights);
    EXPECT_EQ(back.J.size(), 5u);
    EXPECT_TRUE(check_dynamical_twist(back, 1e-12).pass());
    j["J"]["x1"] = j["J"]["0"];
    EXPECT_EQ(schema_path([&] { dynamical_twist_from_json(j); }), "$.J.x1");
    j["J"].erase("x1");
    j["dim"] = 2.5;
    EXPECT_EQ(schema_path([&] { dynamical_twist_from_json(j); }), "$.dim");
}

TEST(JsonIo, StaticTwistParse) {
    auto [R, t] = factorized_twist_example();
    json j{{"R", matrix_to_json(R)}, {"J", matrix_to_json(t.J)}, {"Q", matrix_to_json(t.Q)}};
    auto [R2, t2] = static_twist_from_json(json::parse(j.dump()));
    EXPECT_TRUE(check_drinfeld(R2, t2, 1e-12).pass());
    j.erase("Q");
    EXPECT_EQ(schema_path([&] { static_twist_from_json(j); }), "$.Q");
}

TEST(JsonIo, MissingFile) { EXPECT_THROW(read_json_file("/nonexistent/dynyb.json"), std::runtime_error); }
