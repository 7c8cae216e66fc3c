#include <gtest/gtest.h>

#include <random>

#include <dynyb/graded.hpp>
#include <dynyb/intertwine.hpp>

using namespace dynyb;

namespace {

struct Chain {
    GroupoidPtr g = std::make_shared<const Groupoid>(Groupoid::chain("A5", 5));
    LegPtr v = steps_leg(g, "V");
    Legs two{v, v};

    std::uint32_t a(const std::string& id) const { return v->index(id); }
};

// Random operator respecting the grading on two-step paths.
BlockOperator random_op(const Legs& legs, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    BlockOperator op(legs, legs);
    auto paths = enumerate_paths(legs);
    for (auto& in : paths)
        for (auto& out : paths)
            if (same_grade(legs, in, legs, out)) op.add(in, out, cplx(n(rng), n(rng)));
    return op;
}

double max_diff(const BlockOperator& A, const BlockOperator& B) {
    double d = 0.0;
    for (std::size_t o = 0; o < A.dom().front()->num_source_objects(); ++o) {
        Basis b = Basis::source_fiber(A.dom(), o);
        if (b.paths.empty()) continue;
        DenseMap I = DenseMap::identity(b);
        d = std::max(d, residual(apply(A, 0, I), apply(B, 0, I)));
    }
    return d;
}

}  // namespace

TEST(Paths, EnumerationAndGrades) {
    Chain c;
    EXPECT_EQ(enumerate_paths(c.two, 0).size(), 2u);  // 1>2>1, 1>2>3
    EXPECT_EQ(enumerate_paths(c.two, 2).size(), 4u);
    EXPECT_EQ(enumerate_paths(c.two).size(), 2u + 3u + 4u + 3u + 2u);
    EXPECT_TRUE(same_grade(c.two, {c.a("3>2"), c.a("2>3")}, c.two, {c.a("3>4"), c.a("4>3")}));
    EXPECT_FALSE(same_grade(c.two, {c.a("3>2"), c.a("2>1")}, c.two, {c.a("3>4"), c.a("4>3")}));
    EXPECT_FALSE(path_valid(c.two, {c.a("1>2"), c.a("1>2")}));
}

TEST(BlockOperator, RejectsGradingAndShapeViolations) {
    Chain c;
    BlockOperator op(c.two, c.two);
    EXPECT_THROW(op.add({c.a("1>2"), c.a("2>3")}, {c.a("1>2"), c.a("2>1")}, 1.0), grading_error);
    EXPECT_THROW(op.add({c.a("1>2"), c.a("1>2")}, {c.a("1>2"), c.a("2>1")}, 1.0), grading_error);
    EXPECT_THROW(op.add({c.a("1>2"), c.a("2>1")}, {c.a("1>2"), c.a("2>1")}, Mat::Identity(2, 2)), grading_error);
    op.add({c.a("2>1"), c.a("1>2")}, {c.a("2>3"), c.a("3>2")}, 0.5);
    op.add({c.a("2>1"), c.a("1>2")}, {c.a("2>3"), c.a("3>2")}, 0.25);
    EXPECT_EQ(op.coefficient({c.a("2>1"), c.a("1>2")}, {c.a("2>3"), c.a("3>2")}), cplx(0.75));
    EXPECT_EQ(op.coefficient({c.a("2>1"), c.a("1>2")}, {c.a("2>1"), c.a("1>2")}), cplx(0.0));
    EXPECT_THROW(BlockOperator({}, c.two), grading_error);
}

TEST(BlockOperator, IdentityIsNeutral) {
    Chain c;
    std::mt19937_64 rng(7);
    auto F = random_op(c.two, rng);
    auto I = identity_block(c.two);
    EXPECT_EQ(max_diff(compose_blocks(F, I), F), 0.0);
    EXPECT_EQ(max_diff(compose_blocks(I, F), F), 0.0);
}

TEST(BlockOperator, CompositionIsAssociative) {
    Chain c;
    std::mt19937_64 rng(11);
    for (int t = 0; t < 5; ++t) {
        auto F = random_op(c.two, rng), G = random_op(c.two, rng), H = random_op(c.two, rng);
        EXPECT_LT(max_diff(compose_blocks(compose_blocks(F, G), H), compose_blocks(F, compose_blocks(G, H))), 1e-12);
    }
}

TEST(BlockOperator, ApplyMatchesComposition) {
    Chain c;
    std::mt19937_64 rng(13);
    auto F = random_op(c.two, rng), G = random_op(c.two, rng);
    Basis b = Basis::source_fiber(c.two, 2);
    DenseMap I = DenseMap::identity(b);
    EXPECT_LT(residual(apply(F, 0, apply(G, 0, I)), apply(compose_blocks(F, G), 0, I)), 1e-12);
    EXPECT_THROW(apply(F, 1, I), grading_error);
}

TEST(BlockOperator, TensorProductDimensions) {
    Chain c;
    auto I1 = identity_block({c.v});
    auto T = tensor_blocks(I1, I1);
    EXPECT_EQ(max_diff(T, identity_block(c.two)), 0.0);
    Mat a(2, 2), b(1, 3);
    a << 1, 2, 3, 4;
    b << 1, 0, -1;
    Mat k = kron(a, b);
    EXPECT_EQ(k.rows(), 2);
    EXPECT_EQ(k.cols(), 6);
    EXPECT_EQ(k(1, 5), cplx(-4.0));
}

TEST(Basis, SortedAndOffsets) {
    Chain c;
    Basis b = Basis::source_fiber(c.two, 2);
    EXPECT_TRUE(std::is_sorted(b.paths.begin(), b.paths.end()));
    EXPECT_EQ(b.dim, 4);
    for (std::size_t i = 0; i < b.paths.size(); ++i) EXPECT_EQ(b.offset[i], int(i));
}

TEST(Transfer, TriangleRoundTrip) {
    // triangle_down(triangle_up(S)) = S
    Chain c;
    std::mt19937_64 rng(17);
    auto S = random_op(c.two, rng);
    auto pi = std::make_shared<const ConnectingSet>(ConnectingSet::diagonal(c.g, c.g));
    auto sys = ConnectingSystem::anchored(pi);
    auto up = triangle_up(S, pi);
    EXPECT_EQ(up.kind, TransferOperator::Kind::End2);
    EXPECT_EQ(max_diff(triangle_down(up, sys), S), 0.0);
}

TEST(Transfer, DiagonalScalingInverse) {
    Chain c;
    auto pi = std::make_shared<const ConnectingSet>(ConnectingSet::diagonal(c.g, c.g));
    TransferOperator f;
    f.kind = TransferOperator::Kind::Forward;
    f.pi = pi;
    f.in_legs = {c.v};
    f.out_legs = {c.v};
    for (std::uint32_t a = 0; a < c.v->size(); ++a)
        if (c.v->dim[a]) f.add(c.v->src[a], c.v->tgt[a], {a}, {a}, cplx(1.0 + a, 0.5));
    auto inv = transfer_inverse(f);
    EXPECT_TRUE(inv.invertible());
    EXPECT_EQ(inv.inverse.kind, TransferOperator::Kind::Backward);
    EXPECT_NEAR(std::abs(inv.inverse.coefficient(0, 1, {c.a("1>2")}, {c.a("1>2")}) * f.coefficient(0, 1, {c.a("1>2")}, {c.a("1>2")})), 1.0, 1e-14);
    auto two = transfer_fuse(f, f);
    EXPECT_EQ(two.in_legs.size(), 2u);
    EXPECT_LT(deviation_from_identity(transfer_compose(transfer_fuse(inv.inverse, inv.inverse), two)), 1e-14);
}

TEST(Transfer, RankDeficientHasNoLeftInverse) {
    Chain c;
    auto pi = std::make_shared<const ConnectingSet>(ConnectingSet::diagonal(c.g, c.g));
    TransferOperator f;
    f.kind = TransferOperator::Kind::Forward;
    f.pi = pi;
    f.in_legs = {c.v};
    f.out_legs = {c.v};
    f.add(1, 0, {c.a("2>1")}, {c.a("2>1")}, 1.0);
    EXPECT_TRUE(transfer_inverse(f).invertible());
    TransferOperator h;
    h.kind = TransferOperator::Kind::Forward;
    h.pi = pi;
    h.in_legs = {c.v, c.v};
    h.out_legs = {c.v, c.v};
    // two input paths collapsing onto one output path
    h.add(1, 1, {c.a("2>1"), c.a("1>2")}, {c.a("2>1"), c.a("1>2")}, 1.0);
    h.add(1, 1, {c.a("2>3"), c.a("3>2")}, {c.a("2>1"), c.a("1>2")}, 1.0);
    EXPECT_THROW(transfer_left_inverse(h), not_invertible);
}

TEST(Transfer, KindChecks) {
    Chain c;
    auto pi = std::make_shared<const ConnectingSet>(ConnectingSet::diagonal(c.g, c.g));
    TransferOperator f;
    f.kind = TransferOperator::Kind::Forward;
    f.pi = pi;
    f.in_legs = f.out_legs = {c.v};
    EXPECT_THROW(transfer_compose(f, f), grading_error);
    TransferOperator e = f;
    e.kind = TransferOperator::Kind::End1;
    EXPECT_THROW(transfer_fuse(e, e), grading_error);
    EXPECT_THROW(deviation_from_identity(f), grading_error);
    EXPECT_EQ(flipped(TransferOperator::Kind::Forward), TransferOperator::Kind::Backward);
}

TEST(Convolution, PartialTraceOfIdentityIntertwiner) {
    Chain c;
    auto C = identity_intertwiner(c.v);
    for (std::size_t N : {2u, 4u}) {
        auto t = partial_trace(C(0.0), N);
        EXPECT_FALSE(t.terms.empty());
        for (auto& [k, m] : t.terms) {
            EXPECT_EQ(m.M.rows(), m.M.cols());
            EXPECT_LT((m.M - Mat::Identity(m.M.rows(), m.M.cols())).cwiseAbs().maxCoeff(), 1e-15);
        }
        auto sq = group_by_class(convolve(t, t));
        for (auto& [k, m] : sq) EXPECT_EQ(m.M.rows(), m.M.cols());
    }
    EXPECT_TRUE(partial_trace(C(0.0), 3).terms.empty());  // no closed odd walks on a chain
}
