#include <gtest/gtest.h>

#include <dynyb/groupoid.hpp>

using namespace dynyb;

namespace {
GroupoidPtr ptr(Groupoid g) { return std::make_shared<const Groupoid>(std::move(g)); }

GroupoidPtr d4() {
    return ptr(Groupoid::graph("D4", {"1", "2", "3", "4"}, {{"1", "2"}, {"2", "3"}, {"2", "4"}}));
}
}  // namespace

TEST(Groupoid, ChainStructure) {
    auto g = Groupoid::chain("A5", 5);
    EXPECT_EQ(g.num_objects(), 5u);
    EXPECT_EQ(g.num_generators(), 8u);
    EXPECT_EQ(g.num_arrows(), 5u + 8u);
    const auto a = g.arrow_index("2>3");
    EXPECT_EQ(g.arrow(g.inverse(a)).id, "3>2");
    EXPECT_EQ(g.compose(a, g.inverse(a)), g.identity(1));
    EXPECT_EQ(g.object_value(2), cplx(3.0));
}

TEST(Groupoid, ComposeRequiresMatchingEnds) {
    auto g = Groupoid::chain("A3", 3);
    EXPECT_THROW(g.compose(g.arrow_index("1>2"), g.arrow_index("1>2")), not_composable);
    EXPECT_THROW(g.compose(g.arrow_index("1>2"), g.arrow_index("2>3")), not_composable);  // free: not materialized
}

TEST(Groupoid, FreeWordReduction) {
    auto g = Groupoid::chain("A4", 4);
    auto up = g.arrow_index("2>3"), down = g.arrow_index("3>2"), up2 = g.arrow_index("3>4");
    EXPECT_TRUE(g.word_class(1, {up, down}).empty());
    EXPECT_EQ(g.word_class(1, {up, up2}).size(), 2u);
    EXPECT_EQ(g.word_class(1, {up, down, up}), std::vector<std::size_t>{up});
}

TEST(Groupoid, ActionWindowTable) {
    auto g = Groupoid::action_window(0.39, -3, 3);
    EXPECT_EQ(g.kind(), Groupoid::Kind::Table);
    EXPECT_EQ(g.num_objects(), 7u);
    EXPECT_EQ(g.num_arrows(), 49u);
    const auto a = g.arrow_index("0>1"), b = g.arrow_index("1>3");
    EXPECT_EQ(g.arrow(g.compose(a, b)).id, "0>3");
    EXPECT_EQ(g.object_value(g.object("2")), cplx(2.39));
    EXPECT_EQ(g.window_depth(g.object("-3")), 0);
    EXPECT_EQ(g.window_depth(g.object("0")), 3);
    EXPECT_TRUE(g.truncated());
    // identity first, then +1, then -1 in each source fiber
    auto f = g.source_fiber(g.object("0"));
    EXPECT_EQ(g.arrow(f[0]).id, "1_0");
    EXPECT_EQ(g.arrow(f[1]).id, "0>1");
    EXPECT_EQ(g.arrow(f[2]).id, "0>-1");
    // word classes are composites
    EXPECT_EQ(g.word_class(g.object("0"), {a, g.arrow_index("1>2")}), std::vector<std::size_t>{g.arrow_index("0>2")});
}

TEST(Groupoid, Z2Group) {
    auto g = Groupoid::z2();
    const auto m = g.arrow_index("-");
    EXPECT_EQ(g.compose(m, m), g.identity(0));
    EXPECT_EQ(g.inverse(m), m);
    EXPECT_FALSE(g.truncated());
}

TEST(Groupoid, RejectsDuplicates) {
    EXPECT_THROW(Groupoid::graph("x", {"1", "1"}, {}), std::invalid_argument);
    EXPECT_THROW(Groupoid::graph("x", {"1", "2"}, {{"1", "2"}, {"2", "1"}}), std::invalid_argument);
}

TEST(Groupoid, FromArrowsNeedsIdentities) {
    EXPECT_THROW(Groupoid::from_arrows("x", {"a"}, {}), std::invalid_argument);
    auto g = Groupoid::from_arrows("x", {"a", "b"}, {{"1a", "a", "a", "1a"}, {"1b", "b", "b", "1b"}, {"u", "a", "b", "v"}, {"v", "b", "a", "u"}});
    EXPECT_EQ(g.num_generators(), 2u);
    EXPECT_EQ(g.identity(1), g.arrow_index("1b"));
}

TEST(ConnectingSet, AdIncidenceIsValid) {
    auto A = ptr(Groupoid::chain("A5", 5));
    auto D = d4();
    // m -> m below the fork, 3 -> {3, 4}, 4 -> 2, 5 -> 1
    std::vector<std::vector<long>> C{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 1}, {0, 1, 0, 0}, {1, 0, 0, 0}};
    auto pi = ConnectingSet::from_incidence(C, A, D, 0, 0);
    EXPECT_EQ(pi.size(), 6u);
    EXPECT_TRUE(pi.surjective());
    EXPECT_FALSE(pi.has_multi_edges());
    EXPECT_EQ(pi.from(2).size(), 2u);
}

TEST(ConnectingSet, IncidenceViolations) {
    auto A = ptr(Groupoid::chain("A5", 5));
    auto D = d4();
    std::vector<std::vector<long>> bad{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 1, 0, 0}, {1, 0, 0, 0}};
    EXPECT_THROW(ConnectingSet::from_incidence(bad, A, D, 0, 0), incidence_violation);
    std::vector<std::vector<long>> C{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 1}, {0, 1, 0, 0}, {1, 0, 0, 0}};
    EXPECT_THROW(ConnectingSet::from_incidence(C, A, D, 0, 1), incidence_violation);  // star condition
    EXPECT_THROW(ConnectingSet::from_incidence({{1}}, A, D, 0, 0), incidence_violation);
}

TEST(ConnectingSet, MultiEdgesAndIds) {
    auto A = ptr(Groupoid::chain("A2", 2));
    ConnectingSet pi(A, A);
    pi.add(0, 0);
    pi.add(0, 0);
    EXPECT_TRUE(pi.has_multi_edges());
    EXPECT_EQ(pi.arrow(1).id, "1>1#2");
    EXPECT_FALSE(pi.surjective());
}

TEST(ConnectingSystem, Flavors) {
    auto A = ptr(Groupoid::chain("A5", 5));
    auto diag = std::make_shared<const ConnectingSet>(ConnectingSet::diagonal(A, A));
    EXPECT_EQ(classify_connecting_system(ConnectingSystem::anchored(diag)), Flavor::unique);

    auto D = d4();
    std::vector<std::vector<long>> C{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 1}, {0, 1, 0, 0}, {1, 0, 0, 0}};
    auto pi = std::make_shared<const ConnectingSet>(ConnectingSet::from_incidence(C, A, D, 0, 0));
    auto sys = ConnectingSystem::anchored(pi);
    EXPECT_EQ(classify_connecting_system(sys), Flavor::quasi_unique);
    EXPECT_STREQ(to_string(Flavor::quasi_unique), "quasi-unique");

    // a single object reached only through a forked source and no lonely neighbour
    auto P = ptr(Groupoid::graph("P", {"1"}, {}));
    auto Q = ptr(Groupoid::graph("Q", {"1", "2"}, {}));
    auto fork = std::make_shared<ConnectingSet>(P, Q);
    fork->add(0, 0);
    fork->add(0, 1);
    EXPECT_EQ(classify_connecting_system(ConnectingSystem::anchored(fork)), Flavor::general);
}

TEST(ConnectingSystem, ValidateRejectsBadChoice) {
    auto A = ptr(Groupoid::chain("A3", 3));
    auto diag = std::make_shared<const ConnectingSet>(ConnectingSet::diagonal(A, A));
    ConnectingSystem s{diag, {0, 2, 1}};
    EXPECT_THROW(s.validate(), std::invalid_argument);
}
