#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gapdiamond/modes2d.hpp"
#include "gapdiamond/slab.hpp"

using namespace gapdiamond;
using namespace gapdiamond::modes2d;
using namespace gapdiamond::literals;

namespace {

// Shared solves; each takes about a second at 10 nm pitch.
const ModeSolution2D& rib_mode(Polarization pol) {
    static const ModeSolution2D te = solve_fundamental_2d(reference_rib_waveguide(10.0).build(), 637_nm, Polarization::TE);
    static const ModeSolution2D tm = solve_fundamental_2d(reference_rib_waveguide(10.0).build(), 637_nm, Polarization::TM);
    return pol == Polarization::TE ? te : tm;
}

const ModeSolution2D& ring_mode() {
    static const ModeSolution2D m =
        solve_fundamental_2d(reference_ring_waveguide(10.0).build(), 637_nm, Polarization::TE);
    return m;
}

// Lowest eigenvalue of the 1-D discrete Dirichlet Laplacian on n cell centers.
double box_eig(int n, double h) {
    const double s = std::sin(std::numbers::pi / (2.0 * (n + 1)));
    return 4.0 / (h * h) * s * s;
}

} // namespace

TEST_SUITE("modes2d") {

TEST_CASE("cross-section validation and painting order") {
    CHECK_THROWS_AS(CrossSection(0, 100, 0, 100, 0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(CrossSection(0, 105, 0, 100, 10.0, 1.0), ValidationError);
    CHECK_THROWS_AS(CrossSection(0, 100, 0, 100, 10.0, 1.0, {{-10, 50, 0, 50, 2.0, "out"}}), ValidationError);
    const CrossSection cs(0, 100, 0, 100, 10.0, 1.0, {{0, 100, 0, 50, 2.0, "a"}, {20, 40, 0, 80, 3.0, "b"}});
    CHECK(cs.nx() == 10);
    CHECK(cs.ny() == 10);
    CHECK(cs.index_at(30, 10) == 3.0);
    CHECK(cs.index_at(70, 10) == 2.0);
    CHECK(cs.index_at(70, 70) == 1.0);
    CHECK(cs.max_index() == 3.0);
    CHECK(cs.with_pitch(5.0).nx() == 20);
}

TEST_CASE("reference rib slices and column stacks") {
    const auto cs = reference_rib_waveguide(10.0).build();
    const auto sl = cs.slices();
    REQUIRE(sl.size() == 3);
    CHECK(sl[1].first == doctest::Approx(-500.0));
    CHECK(sl[1].second == doctest::Approx(500.0));
    const auto center = cs.column_stack(0.0);
    const auto side = cs.column_stack(-800.0);
    auto gap_thickness = [](const LayerStack& st) {
        double t = 0.0;
        for (const auto& l : st.layers())
            if (l.is_finite() && l.n == materials::kGaP) t += l.thickness->nm();
        return t;
    };
    CHECK(gap_thickness(center) == doctest::Approx(120.0));
    CHECK(gap_thickness(side) == doctest::Approx(70.0));
    CHECK(center.bottom().n == materials::kDiamond);
}

TEST_CASE("uniform section reproduces the discrete box mode") {
    const double n = 2.0, h = 10.0;
    const double k0 = 2 * std::numbers::pi / 637.0;
    double prev = 0.0;
    for (double L : {400.0, 800.0, 1600.0}) {
        const CrossSection cs(0, L, 0, 300, h, n);
        const auto m = solve_fundamental_2d(cs, 637_nm, Polarization::TE);
        const double expect = std::sqrt(n * n - (box_eig(cs.nx(), h) + box_eig(cs.ny(), h)) / (k0 * k0));
        CHECK(m.n_eff() == doctest::Approx(expect).epsilon(1e-10));
        CHECK(m.n_eff() < n);
        CHECK(m.n_eff() > prev);
        CHECK_FALSE(m.guided());
        prev = m.n_eff();
    }
}

TEST_CASE("reference rib modes are guided and bracketed by the slab indices") {
    const auto cs = reference_rib_waveguide(10.0).build();
    for (Polarization pol : {Polarization::TE, Polarization::TM}) {
        const auto& m = rib_mode(pol);
        const double inner = slab::fundamental_mode(cs.column_stack(0.0), 637_nm, pol).n_eff();
        const double outer = slab::fundamental_mode(cs.column_stack(-800.0), 637_nm, pol).n_eff();
        CHECK(m.guided());
        CHECK(m.n_eff() > outer);
        CHECK(m.n_eff() < inner);
        CHECK(m.n_eff() > m.cladding_bound());
        CHECK(m.n_eff() < cs.max_index());
        CHECK(m.residual() < 1e-6);
    }
}

TEST_CASE("mode normalization, boundary decay and mirror symmetry") {
    for (Polarization pol : {Polarization::TE, Polarization::TM}) {
        const auto& m = rib_mode(pol);
        double sum = 0.0, asym = 0.0, edge = 0.0;
        const double peak = m.peak(PeakReference::GlobalField).intensity;
        for (int j = 0; j < m.ny(); ++j)
            for (int i = 0; i < m.nx(); ++i) {
                sum += m.intensity(i, j) * m.pitch() * m.pitch();
                asym = std::max(asym, std::abs(m.intensity(i, j) - m.intensity(m.nx() - 1 - i, j)) / peak);
                if (i == 0 || j == 0 || i == m.nx() - 1 || j == m.ny() - 1) edge = std::max(edge, m.intensity(i, j));
            }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(asym < 1e-6);
        CHECK(edge < 1e-3 * peak);
    }
}

TEST_CASE("solves are bit-for-bit deterministic") {
    const auto cs = reference_rib_waveguide(20.0).build();
    const auto a = solve_fundamental_2d(cs, 637_nm, Polarization::TE);
    const auto b = solve_fundamental_2d(cs, 637_nm, Polarization::TE);
    CHECK(a.n_eff() == b.n_eff());
    std::ostringstream sa, sb;
    a.write_csv(sa);
    b.write_csv(sb);
    CHECK(sa.str() == sb.str());
}

TEST_CASE("2-D result stays below the unetched slab index") {
    RidgeGeometry g = reference_rib_waveguide(10.0);
    for (double w : {400.0, 2000.0}) {
        g.width_nm = w;
        const auto cs = g.build();
        const auto m = solve_fundamental_2d(cs, 637_nm, Polarization::TE);
        CHECK(m.n_eff() < slab::fundamental_mode(cs.column_stack(0.0), 637_nm, Polarization::TE).n_eff());
    }
}

TEST_CASE("effective index method") {
    SUBCASE("horizontally uniform structure equals the slab result") {
        const CrossSection cs(-500, 500, -1000, 1120, 10.0, 1.0,
                              {{-500, 500, -1000, 0, 2.4, "diamond"}, {-500, 500, 0, 120, 3.3, "GaP"}});
        const double slab_n = slab::fundamental_mode(cs.column_stack(0.0), 637_nm, Polarization::TM).n_eff();
        CHECK(effective_index_method(cs, 637_nm, Polarization::TM) == slab_n);
    }
    SUBCASE("reference rib agrees with the 2-D solve") {
        const auto cs = reference_rib_waveguide(10.0).build();
        for (Polarization pol : {Polarization::TE, Polarization::TM}) {
            const double eim = effective_index_method(cs, 637_nm, pol);
            CHECK(std::abs(eim - rib_mode(pol).n_eff()) < 0.05 * rib_mode(pol).n_eff());
        }
    }
    SUBCASE("narrow 100 nm ribs: both methods classify alike") {
        struct Case {
            double membrane, slab;
            Polarization pol;
            bool guided;
        };
        // 60/40 nm TM is below the slab cutoff on diamond; the others guide.
        const Case cases[] = {{120, 70, Polarization::TE, true},
                              {120, 70, Polarization::TM, true},
                              {60, 40, Polarization::TE, true},
                              {60, 40, Polarization::TM, false}};
        for (const Case& c : cases) {
            RidgeGeometry g;
            g.width_nm = 100;
            g.membrane_nm = c.membrane;
            g.slab_nm = c.slab;
            g.pitch_nm = 5.0;
            const auto cs = g.build();
            const bool guided_2d = solve_fundamental_2d(cs, 637_nm, c.pol).guided();
            bool guided_eim = true;
            try {
                effective_index_method(cs, 637_nm, c.pol);
            } catch (const UnguidedError&) {
                guided_eim = false;
            }
            CAPTURE(c.membrane);
            CHECK(guided_2d == c.guided);
            CHECK(guided_eim == c.guided);
        }
    }
}

TEST_CASE("effective area of a flat field is the domain area") {
    const CrossSection cs(0, 200, 0, 100, 10.0, 1.5);
    const auto m = make_mode_for_test(cs, std::vector<double>(cs.nx() * cs.ny(), 3.0), Polarization::TE, 637.0);
    CHECK(effective_area(m) == doctest::Approx(200.0 * 100.0).epsilon(1e-12));
    CHECK(effective_area(m, PeakReference::GlobalField) == doctest::Approx(200.0 * 100.0).epsilon(1e-12));
}

TEST_CASE("peak references") {
    // Two cells: the field peak sits in low index, the energy peak in high index.
    const CrossSection cs(0, 20, 0, 10, 10.0, 1.0, {{10, 20, 0, 10, 3.0, "hi"}});
    const auto m = make_mode_for_test(cs, {1.0, 0.8}, Polarization::TE, 637.0);
    const auto f = m.peak(PeakReference::GlobalField);
    const auto e = m.peak(PeakReference::GlobalEnergy);
    const auto c = m.peak(PeakReference::FieldPeakCavityIndex);
    CHECK(f.i == 0);
    CHECK(f.eps == doctest::Approx(1.0));
    CHECK(e.i == 1);
    CHECK(c.i == 0);
    CHECK(c.eps == doctest::Approx(9.0));
    // energy = (1 + 9 * 0.64) I0 h^2 with h = 10 nm
    CHECK(effective_area(m, PeakReference::GlobalField) == doctest::Approx(676.0).epsilon(1e-12));
    CHECK(effective_area(m, PeakReference::GlobalEnergy) == doctest::Approx(676.0 / 5.76).epsilon(1e-12));
    CHECK(effective_area(m, PeakReference::FieldPeakCavityIndex) == doctest::Approx(676.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("ring volume is linear in diameter and independent of field scale") {
    const auto& m = ring_mode();
    const auto v1 = ring_mode_volume(m, 2.5_um);
    const auto v2 = ring_mode_volume(m, 5_um);
    CHECK(v2.nm3 == doctest::Approx(2.0 * v1.nm3).epsilon(1e-14));
    CHECK(ring_mode_volume(m.scaled(10.0), 2.5_um).cubic_wavelengths ==
          doctest::Approx(v1.cubic_wavelengths).epsilon(1e-13));
    const double unit = 637.0 / 3.3;
    CHECK(v1.cubic_wavelengths == doctest::Approx(v1.nm3 / (unit * unit * unit)).epsilon(1e-14));
    CHECK_THROWS_AS(ring_mode_volume(m, 0_nm), ValidationError);
}

TEST_CASE("effective area converges under grid refinement") {
    const auto fine = solve_fundamental_2d(reference_ring_waveguide(5.0).build(), 637_nm, Polarization::TE);
    const double a10 = effective_area(ring_mode()), a5 = effective_area(fine);
    CHECK(std::abs(a10 - a5) < 0.02 * a5);
}

TEST_CASE("field ratio at points") {
    const auto& m = ring_mode();
    const auto p = m.peak(PeakReference::GlobalField);
    CHECK(field_ratio_at_point(m, m.x_center(p.i), m.y_center(p.j)) == doctest::Approx(1.0).epsilon(1e-14));
    const double nv = field_ratio_at_point(m, lateral_peak_x(m, -20.0), -20.0);
    CHECK(nv > 0.0);
    CHECK(nv < 1.0);
    CHECK(field_ratio_at_point(m, 1100.0, 1000.0) < 1e-4);
    CHECK_THROWS_AS(field_ratio_at_point(m, 1e6, 0.0), ValidationError);
    CHECK(field_ratio_at_point(m.scaled(3.0), 0.0, -20.0) ==
          doctest::Approx(field_ratio_at_point(m, 0.0, -20.0)).epsilon(1e-13));
}

TEST_CASE("bilinear interpolation hits cell centers exactly") {
    const auto& m = ring_mode();
    for (int i : {3, 50, 100})
        for (int j : {7, 60, 120}) CHECK(m.intensity_at(m.x_center(i), m.y_center(j)) == doctest::Approx(m.intensity(i, j)));
}

TEST_CASE("csv export") {
    const auto& m = rib_mode(Polarization::TE);
    std::ostringstream os;
    m.write_csv(os);
    const std::string s = os.str();
    CHECK(s.rfind("x_nm,y_nm,intensity\n", 0) == 0);
    CHECK(static_cast<long>(std::count(s.begin(), s.end(), '\n')) == 1L + m.nx() * m.ny());
}

}
