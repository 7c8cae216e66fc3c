#include <gtest/gtest.h>

#include <dynyb/rmodels.hpp>

#include "oracles.hpp"

using namespace dynyb;

namespace {

struct Models {
    SosParams sos;
    AParams ell, trig;
    Models() {
        ell.theta.L = 4;
        trig.theta.L = 7;
    }
    std::vector<SpectralOperator> all() const {
        AParams un = ell;
        un.theta.L = 6;
        un.restricted = false;
        return {build_r8v(sos.e), build_rsos(sos), build_rsym_sos(sos), build_elliptic_A(ell), build_elliptic_A(un),
                build_trig_A(trig)};
    }
};

Path path(const LegPtr& leg, const std::string& a, const std::string& b) { return {leg->index(a), leg->index(b)}; }

cplx oracle_h(cplx z, cplx p, double lambda) {
    const cplx f2 = oracle::phi_pentagonal(p * p);
    const cplx zeta = std::pow(p, -0.125) * oracle::phi_pentagonal(p) / (f2 * f2);
    return zeta * oracle::H(lambda * z, p, 1.0) * oracle::Theta(lambda * z, p, 1.0);
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Models, DybeOnRandomSamples) {
    Models m;
    Sampler s(42);
    for (auto& R : m.all())
        for (int i = 0; i < 10; ++i) {
            const cplx z = s.spectral(), w = s.spectral();
            EXPECT_LT(dybe_residual(R, z, w), 1e-9) << R.name << " z=" << z << " w=" << w;
        }
}

TEST(Models, Inversion) {
    Models m;
    Sampler s(5);
    for (auto& R : m.all())
        for (int i = 0; i < 10; ++i) EXPECT_LT(inversion_residual(R, s.spectral()), 1e-9) << R.name;
}

TEST(Models, IdentityAtZero) {
    Models m;
    for (auto& R : m.all()) {
        Legs legs{R.leg, R.leg};
        for (auto o : check_objects(R)) {
            Basis b = Basis::source_fiber(legs, o);
            if (b.paths.empty()) continue;
            DenseMap I = DenseMap::identity(b);
            EXPECT_LT(residual(apply(R(0.0), 0, I), I), 1e-13) << R.name;
        }
    }
}

TEST(Models, DybeDetectsPerturbation) {
    Models m;
    auto R = build_rsos(m.sos);
    auto bad = R;
    bad.eval = [R](cplx z) {
        auto op = R(z);
        auto p = path(R.leg, "0>1", "1>0");
        op.add(p, p, 1e-3);
        return op;
    };
    EXPECT_GT(dybe_residual(bad, cplx(0.3, 0.1), cplx(0.55, -0.05)), 1e-6);
}

TEST(EightVertex, EntriesMatchThetaOracle) {
    SosParams P;
    auto R = build_r8v(P.e);
    const cplx p = P.e.p, z(0.37, 0.08);
    const double l = 0.1;
    auto H = [&](cplx x) { return oracle::H(x, p, 1.0); };
    auto T = [&](cplx x) { return oracle::Theta(x, p, 1.0); };
    const cplx n = oracle_h(1.0, p, l) / (oracle_h(z + 1.0, p, l) * T(0.0) * H(l));
    const cplx a = n * T(l * z) * H(l * (z + 1.0)), b = n * H(l * z) * T(l * (z + 1.0));
    const cplx c = n * H(l) * T(l * z) * T(l * (z + 1.0)) / T(l), d = n * H(l) * H(l * z) * H(l * (z + 1.0)) / T(l);
    auto op = R(z);
    EXPECT_LT(rel(op.coefficient({0, 0}, {0, 0}), a), 1e-12);
    EXPECT_LT(rel(op.coefficient({1, 1}, {1, 1}), a), 1e-12);
    EXPECT_LT(rel(op.coefficient({0, 1}, {1, 0}), b), 1e-12);
    EXPECT_LT(rel(op.coefficient({0, 1}, {0, 1}), c), 1e-12);
    EXPECT_LT(rel(op.coefficient({1, 1}, {0, 0}), d), 1e-12);
}

TEST(Sos, WeightsMatchThetaOracle) {
    SosParams P;
    auto R = build_rsos(P);
    const auto& G = R.groupoid();
    const cplx z(0.21, -0.07);
    auto op = R(z);
    for (int k : {-2, 0, 3}) {
        const std::string o = std::to_string(k), up = std::to_string(k + 1), dn = std::to_string(k - 1);
        const cplx a = G.object_value(G.object(o));
        auto hh = [&](cplx x) { return oracle_h(x, P.e.p, 0.1); };
        const cplx den = hh(a) * hh(z + 1.0);
        auto pm = path(R.leg, o + ">" + up, up + ">" + o), mp = path(R.leg, o + ">" + dn, dn + ">" + o);
        EXPECT_LT(rel(op.coefficient(pm, pm), hh(a - z) * hh(1.0) / den), 1e-11);
        EXPECT_LT(rel(op.coefficient(mp, mp), hh(a + z) * hh(1.0) / den), 1e-11);
        EXPECT_LT(rel(op.coefficient(mp, pm), hh(a + 1.0) * hh(z) / den), 1e-11);
        EXPECT_LT(rel(op.coefficient(pm, mp), hh(a - 1.0) * hh(z) / den), 1e-11);
    }
}

TEST(TrigA, WeightsAreSines) {
    AParams P;
    P.theta.L = 7;
    auto R = build_trig_A(P);
    const cplx z(0.3, 0.1);
    auto s = [](cplx x) { return std::sin(pi * x / 12.0); };
    auto op = R(z);
    auto pm = path(R.leg, "3>4", "4>3"), mp = path(R.leg, "3>2", "2>3");
    const cplx den = s(3.0) * s(1.0 - z);
    EXPECT_LT(rel(op.coefficient(pm, pm), s(3.0 + z) * s(1.0) / den), 1e-14);
    EXPECT_LT(rel(op.coefficient(mp, mp), s(3.0 - z) * s(1.0) / den), 1e-14);
    EXPECT_LT(rel(op.coefficient(pm, mp), std::sqrt(s(2.0) * s(4.0)) * s(z) / den), 1e-14);
}

TEST(RestrictedChain, BoundaryFiberIsReduced) {
    AParams P;
    P.theta.L = 4;
    auto R = build_elliptic_A(P);
    auto op = R(cplx(0.4, 0.1));
    auto back = path(R.leg, "1>2", "2>1");
    ASSERT_NE(op.outputs(back), nullptr);
    EXPECT_EQ(op.outputs(back)->size(), 1u);
    EXPECT_EQ(enumerate_paths({R.leg, R.leg}, 0).size(), 2u);
}

TEST(Symmetry, SymmetricModelsPassAndSosFails) {
    Models m;
    const cplx z(0.3, 0.12);
    EXPECT_TRUE(check_symmetric(build_r8v(m.sos.e), z).pass);
    EXPECT_TRUE(check_symmetric(build_rsym_sos(m.sos), z).pass);
    EXPECT_TRUE(check_symmetric(build_elliptic_A(m.ell), z).pass);
    auto c = check_symmetric(build_rsos(m.sos), z);
    EXPECT_FALSE(c.pass);
    EXPECT_GT(c.residual, 1e-3);
}

TEST(Symmetry, TransposeIsInvolutive) {
    Models m;
    auto R = build_rsos(m.sos);
    auto TT = transpose_op(transpose_op(R));
    const cplx z(0.3, 0.12);
    auto A = R(z), B = TT(z);
    for (auto& [in, row] : A.blocks())
        for (auto& [out, v] : row) EXPECT_EQ(B.coefficient(in, out), v(0, 0));
}

TEST(PoleGuard, ThrowsNearPole) {
    AParams P;
    P.theta.L = 7;
    auto R = build_trig_A(P);
    EXPECT_THROW(R(1.0), pole_proximity);  // [1 - z] = 0
}
