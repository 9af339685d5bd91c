#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "gapdiamond/cavity.hpp"

using namespace gapdiamond;
using namespace gapdiamond::cavity;
using namespace gapdiamond::literals;

namespace {

constexpr double kPi = std::numbers::pi;

RingSweep coarse_sweep() {
    RingSweep s;
    s.waveguide = modes2d::reference_ring_waveguide(20.0);
    s.waveguide.padding_nm = 800.0;
    return s;
}

} // namespace

TEST_SUITE("cavity") {

TEST_CASE("loss-limited Q") {
    // 2 pi n / (lambda alpha), alpha = 72 dB/cm = 16.5786 1/m
    const double q72 = 2 * kPi * 3.3 / (637e-9 * 72.0 * 100.0 / (10.0 * std::log10(std::exp(1.0))));
    CHECK(*q_from_loss(Attenuation::db_per_cm(72.0), 637_nm, 3.3) == doctest::Approx(q72).epsilon(1e-13));
    CHECK(q72 == doctest::Approx(19633.88).epsilon(1e-6));
    CHECK(*q_from_loss(Attenuation::db_per_cm(232.0), 637_nm, 3.3) == doctest::Approx(6093.27).epsilon(1e-5));
    CHECK(*q_from_loss(Attenuation::db_per_cm(144.0), 637_nm, 3.3) ==
          doctest::Approx(0.5 * q72).epsilon(1e-14));
    // dB/cm input and 1/m input agree exactly.
    CHECK(*q_from_loss(Attenuation::db_per_cm(72.0), 637_nm, 3.3) ==
          *q_from_loss(Attenuation::per_meter(db_per_cm_to_inverse_meters(72.0)), 637_nm, 3.3));
    CHECK_FALSE(q_from_loss(Attenuation::per_meter(0.0), 637_nm, 3.3).has_value());
    CHECK_THROWS_AS(q_from_loss(Attenuation::per_meter(-1.0), 637_nm, 3.3), ValidationError);
}

TEST_CASE("generic mode volume") {
    const std::vector<double> I(50, 2.0), eps(50, 5.76);
    CHECK(mode_volume(I, eps, 8.0) == doctest::Approx(400.0).epsilon(1e-14));
    std::vector<double> I10(I);
    for (double& v : I10) v *= 100.0;
    CHECK(mode_volume(I10, eps, 8.0) == doctest::Approx(400.0).epsilon(1e-14));
    CHECK_THROWS_AS(mode_volume(std::vector<double>(4, 0.0), std::vector<double>(4, 1.0), 1.0), ValidationError);
    CHECK_THROWS_AS(mode_volume(I, std::vector<double>(3, 1.0), 1.0), ValidationError);
}

TEST_CASE("Purcell formula values") {
    NVEmitter e;
    const CavityParams p{20000.0, 18.0, 3.3, 2.4, 1.0, 637_nm};
    // (3 / 4 pi^2) (20000 / 18) (3.3 / 2.4) (0.35 / 13)
    CHECK(purcell_total(p, e) == doctest::Approx(3.1257).epsilon(1e-4));
    CHECK(purcell_total(p, e) ==
          doctest::Approx(3.0 / (4 * kPi * kPi) * (20000.0 / 18.0) * 1.375 * (0.35 / 13.0)).epsilon(1e-14));
    NVEmitter all_zpl;
    all_zpl.gamma_zpl_hz = all_zpl.gamma_total_hz;
    CHECK(purcell_total(p, all_zpl) == doctest::Approx(3.0 / (4 * kPi * kPi) * (20000.0 / 18.0) * 1.375));
    NVEmitter perpendicular;
    perpendicular.dipole_angle = kPi / 2;
    CHECK(purcell_total(p, perpendicular) < 1e-30);
}

TEST_CASE("cavity parameter validation") {
    NVEmitter e;
    CHECK_THROWS_AS(purcell_total({0.0, 18.0, 3.3, 2.4, 1.0, 637_nm}, e), ValidationError);
    CHECK_THROWS_AS(purcell_total({1e4, 0.0, 3.3, 2.4, 1.0, 637_nm}, e), ValidationError);
    CHECK_THROWS_AS(purcell_total({1e4, 18.0, 3.3, 2.4, 1.2, 637_nm}, e), ValidationError);
    CHECK_THROWS_AS(purcell_total({1e4, 18.0, 2.0, 2.4, 1.0, 637_nm}, e), ValidationError);
}

TEST_CASE("zero-phonon-line enhancement") {
    NVEmitter e;
    CHECK(zpl_enhancement(1.0, e) == doctest::Approx(13.0 / 0.35).epsilon(1e-14));
    CHECK(zpl_enhancement(1.08, e) == doctest::Approx(40.11).epsilon(1e-3));
    CHECK(zpl_enhancement(0.0, e) == 0.0);
    CHECK(zpl_enhancement(2.5, e) * e.branching_ratio() == doctest::Approx(2.5).epsilon(1e-15));
    CHECK_THROWS_AS(zpl_enhancement(-1.0, e), ValidationError);
}

TEST_CASE("F_SE does not depend on the length unit") {
    NVEmitter e;
    const double v_nm3 = 1.2e8;
    const double f_nm = purcell_total(19634.0, v_nm3, 637.0, 3.3, 2.4, 0.5, e);
    const double f_um = purcell_total(19634.0, v_nm3 * 1e-9, 0.637, 3.3, 2.4, 0.5, e);
    CHECK(f_nm == doctest::Approx(f_um).epsilon(1e-12));
}

TEST_CASE("F_SE monotonicity on random parameter pairs") {
    std::mt19937_64 rng(314);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        NVEmitter e;
        e.gamma_zpl_hz = 0.1e6 + 5e6 * u(rng);
        CavityParams p{1e3 + 1e5 * u(rng), 1.0 + 50.0 * u(rng), 3.3, 2.4, u(rng), 637_nm};
        const double f = purcell_total(p, e);
        CavityParams q = p;
        q.q *= 1.0 + u(rng);
        CHECK(purcell_total(q, e) >= f);
        q = p;
        q.v_cubic *= 1.0 + u(rng);
        CHECK(purcell_total(q, e) <= f);
        q = p;
        q.field_ratio_sq += (1.0 - q.field_ratio_sq) * u(rng);
        CHECK(purcell_total(q, e) >= f);
        NVEmitter e2 = e;
        e2.gamma_zpl_hz += (e.gamma_total_hz - e.gamma_zpl_hz) * u(rng);
        CHECK(purcell_total(p, e2) >= f);
    }
}

TEST_CASE("coupling ratio: orthogonal dipole and field scaling") {
    NVEmitter e;
    CHECK(coupling_ratio(e, 0.3, 1e8) > 0.0);
    NVEmitter perp = e;
    perp.dipole_angle = kPi / 2;
    CHECK(coupling_ratio(perp, 0.3, 1e8) < 1e-30 * coupling_ratio(e, 0.3, 1e8));
    CHECK(coupling_ratio(e, 0.3 * 49.0, 1e8 * 49.0) == doctest::Approx(coupling_ratio(e, 0.3, 1e8)).epsilon(1e-14));
    CHECK_THROWS_AS(coupling_ratio(e, 0.3, 0.0), ValidationError);
}

TEST_CASE("coupling-rate chain reproduces the closed-form enhancement") {
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const double n_core = 2.5 + 1.5 * u(rng);
        const double n_host = 1.5 + (n_core - 1.5) * u(rng);
        const modes2d::CrossSection cs(0, 400, 0, 300, 20.0, 1.0 + 0.4 * u(rng),
                                       {{0, 400, 0, 100, n_host, "host"}, {100, 300, 100, 220, n_core, "core"}});
        std::vector<double> field(cs.nx() * cs.ny());
        for (double& f : field) f = u(rng) - 0.3;
        const double lambda = 500.0 + 400.0 * u(rng);
        const auto mode = modes2d::make_mode_for_test(cs, field, Polarization::TE, lambda);
        NVEmitter e;
        e.lambda_zpl = Length::nanometers(lambda);
        e.dipole_angle = 1.2 * u(rng);
        e.gamma_total_hz = 5e6 + 20e6 * u(rng);
        e.gamma_zpl_hz = e.gamma_total_hz * (0.01 + 0.5 * u(rng));
        const Length D = Length::nanometers(1000.0 + 9000.0 * u(rng));
        const double q = 1e3 + 1e5 * u(rng);
        const double x = 10.0 + 380.0 * u(rng), y = 10.0 + 90.0 * u(rng);

        const double g2_over_gamma = coupling_ratio(e, mode, D, x, y, n_host);
        const double chain = 4.0 * g2_over_gamma * e.gamma_zpl_hz / (kappa(q, e.lambda_zpl) * e.gamma_total_hz);

        const auto v = modes2d::ring_mode_volume(mode, D);
        const CavityParams p{q, v.cubic_wavelengths, cs.max_index(), n_host,
                             modes2d::field_ratio_at_point(mode, x, y), e.lambda_zpl};
        CHECK(chain == doctest::Approx(purcell_total(p, e)).epsilon(1e-10));
    }
}

TEST_CASE("design sweep: single point equals direct composition") {
    RingSweep s = coarse_sweep();
    s.polarizations = {Polarization::TE};
    const auto table = design_ring(s);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.failures.empty());
    const auto& r = table.rows.front();

    const auto mode = modes2d::solve_fundamental_2d(s.waveguide.build(), 637_nm, Polarization::TE);
    const double x = modes2d::lateral_peak_x(mode, -20.0);
    const double frs = modes2d::field_ratio_at_point(mode, x, -20.0);
    const auto v = modes2d::ring_mode_volume(mode, 2.5_um);
    const double q = *q_from_loss(Attenuation::db_per_cm(72.0), 637_nm, 3.3);
    const double f = purcell_total({q, v.cubic_wavelengths, 3.3, 2.4, frs, 637_nm}, NVEmitter{});
    CHECK(r.n_eff == mode.n_eff());
    CHECK(r.field_ratio_sq == frs);
    CHECK(r.v_cubic == v.cubic_wavelengths);
    CHECK(r.q == q);
    CHECK(r.f_se == f);
    CHECK(r.f_zpl == zpl_enhancement(f, NVEmitter{}));
    CHECK(r.nv_y_nm == -20.0);
}

TEST_CASE("design sweep: deeper emitters see weaker fields, rows sorted") {
    RingSweep s = coarse_sweep();
    s.depths_nm = {10, 20, 40, 80};
    s.diameters_nm = {2500, 5000};
    const auto table = design_ring(s, 2);
    REQUIRE(table.rows.size() == 16);
    for (std::size_t k = 1; k < table.rows.size(); ++k) CHECK(table.rows[k - 1].f_se >= table.rows[k].f_se);
    for (Polarization pol : {Polarization::TE, Polarization::TM}) {
        double prev = 2.0;
        for (double depth : s.depths_nm)
            for (const auto& r : table.rows)
                if (r.polarization == pol && r.depth_nm == depth && r.diameter_nm == 2500) {
                    CHECK(r.field_ratio_sq < prev);
                    prev = r.field_ratio_sq;
                }
    }
}

TEST_CASE("design sweep: output independent of the worker count") {
    RingSweep s = coarse_sweep();
    s.membranes_nm = {100, 120, 140};
    std::ostringstream a, b;
    write_design_csv(a, design_ring(s, 1));
    write_design_csv(b, design_ring(s, 3));
    CHECK(a.str() == b.str());
}

TEST_CASE("design sweep: unsolvable points are reported, all-unsolvable throws") {
    RingSweep s = coarse_sweep();
    s.gaps_nm = {0.0, 40.0};
    const auto table = design_ring(s);
    CHECK_FALSE(table.rows.empty());
    REQUIRE_FALSE(table.failures.empty());
    for (const auto& f : table.failures) {
        CHECK(f.gap_nm == 40.0);
        CHECK(f.reason.find("unguided") != std::string::npos);
    }

    s.gaps_nm = {40.0};
    s.polarizations = {Polarization::TM};
    CHECK_THROWS_AS(design_ring(s), SolverError);
}

TEST_CASE("design sweep validation") {
    RingSweep s = coarse_sweep();
    s.diameters_nm.clear();
    CHECK_THROWS_AS(design_ring(s), ValidationError);
    s = coarse_sweep();
    s.alpha = Attenuation::per_meter(0.0);
    CHECK_THROWS_AS(design_ring(s), ValidationError);
    s = coarse_sweep();
    s.polarizations.clear();
    CHECK_THROWS_AS(design_ring(s), ValidationError);
}

TEST_CASE("design CSV layout") {
    RingSweep s = coarse_sweep();
    s.polarizations = {Polarization::TE};
    std::ostringstream os;
    write_design_csv(os, design_ring(s));
    const std::string text = os.str();
    CHECK(text.rfind("polarization,diameter_nm,depth_nm,membrane_nm,gap_nm,n_eff,q,kappa_mhz,g2_over_gamma_mhz,"
                     "gamma_total_mhz,gamma_zpl_mhz,v_nm3,v_lambda_n3,field_ratio_sq,f_se,f_zpl\n",
                     0) == 0);
    CHECK(text.find("\nTE,2500.000,20.000,120.000,0.000,") != std::string::npos);
    CHECK(text.find(",13.000000,0.350000,") != std::string::npos);
}

}
