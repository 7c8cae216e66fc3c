// Twists the restricted elliptic A_5 operator into a D_4 operator through the
// A -> D cell system and prints the twisted operator's source fiber at the
// branch node together with its dynamical YBE residual.

#include <iostream>

#include <dynyb/json_io.hpp>
#include <dynyb/twist.hpp>

int main() {
    using namespace dynyb;
    AParams P;
    P.theta.L = 4;
    auto R = build_elliptic_A(P);
    auto cells = build_AD_cells(4, R.leg);

    auto dev = cell_twist_deviation(cells, R, 0.31);
    std::cout << "cell deviation " << dev.deviation() << "\n";

    auto RD = cell_twist_operator(cells, R);
    const cplx z(0.31, 0.02), w(0.17, -0.05);
    std::cout << "twisted dYBE residual " << dybe_residual(RD, z, w) << "\n";

    const std::size_t branch = cells.D->object("2");
    Basis b = Basis::source_fiber({RD.leg, RD.leg}, branch);
    std::cout << fiber_to_json(apply(RD(z), 0, DenseMap::identity(b))).dump(2) << "\n";
}
