#include "gapdiamond/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <tuple>

#include <fmt/format.h>

#include "gapdiamond/parallel.hpp"

namespace gapdiamond::cavity {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kPi = std::numbers::pi;

double omega(Length wavelength) { return 2.0 * kPi * kSpeedOfLight / wavelength.m(); }

double cos2(const NVEmitter& e) {
    const double c = std::cos(e.dipole_angle);
    return c * c;
}

void require_nonempty(const std::vector<double>& v, const char* what, bool allow_zero) {
    if (v.empty()) throw ValidationError(fmt::format("sweep '{}' is empty", what));
    for (double x : v)
        if (!std::isfinite(x) || x < 0.0 || (!allow_zero && x == 0.0))
            throw ValidationError(fmt::format("sweep '{}' has invalid value {}", what, x));
}

} // namespace

void CavityParams::validate() const {
    if (!(q > 0.0)) throw ValidationError(fmt::format("Q must be > 0, got {}", q));
    if (!(v_cubic > 0.0)) throw ValidationError(fmt::format("mode volume must be > 0, got {}", v_cubic));
    if (!(field_ratio_sq >= 0.0 && field_ratio_sq <= 1.0))
        throw ValidationError(fmt::format("field_ratio_sq {} outside [0, 1]", field_ratio_sq));
    if (!(n_host >= 1.0 && n_cavity >= n_host))
        throw ValidationError(fmt::format("need n_cavity >= n_host >= 1, got {} and {}", n_cavity, n_host));
    if (!(wavelength.nm() > 0.0)) throw ValidationError("wavelength must be > 0");
}

std::optional<double> q_from_loss(Attenuation alpha, Length wavelength, double n) {
    const double a = alpha.inverse_meters();
    if (a < 0.0 || !std::isfinite(a)) throw ValidationError(fmt::format("loss must be >= 0, got {} 1/m", a));
    if (!(wavelength.m() > 0.0)) throw ValidationError("wavelength must be > 0");
    if (!(n >= 1.0)) throw ValidationError(fmt::format("index must be >= 1, got {}", n));
    if (a == 0.0) return std::nullopt;
    return 2.0 * kPi * n / (wavelength.m() * a);
}

double mode_volume(std::span<const double> intensity, std::span<const double> eps, double cell_volume) {
    if (intensity.size() != eps.size() || intensity.empty())
        throw ValidationError("mode volume needs equally sized, non-empty field and permittivity grids");
    if (!(cell_volume > 0.0)) throw ValidationError("cell volume must be > 0");
    double energy = 0.0, peak = 0.0;
    for (std::size_t k = 0; k < intensity.size(); ++k) {
        const double u = eps[k] * intensity[k];
        energy += u;
        peak = std::max(peak, u);
    }
    if (!(peak > 0.0)) throw ValidationError("mode field is identically zero");
    return energy * cell_volume / peak;
}

modes2d::RingVolume mode_volume(const modes2d::ModeSolution2D& mode, Length diameter) {
    return modes2d::ring_mode_volume(mode, diameter);
}

double coupling_ratio(const NVEmitter& emitter, double intensity_at_nv, double energy_nm3, double n_host) {
    emitter.validate();
    if (!(energy_nm3 > 0.0)) throw ValidationError("field energy integral must be > 0");
    if (!(intensity_at_nv >= 0.0)) throw ValidationError("field intensity at the emitter must be >= 0");
    const double lam = emitter.lambda_zpl.nm();
    const double eps_host = n_host * n_host;
    return 3.0 / (16.0 * kPi * kPi) * std::pow(lam / n_host, 3) * eps_host * intensity_at_nv * cos2(emitter) /
           energy_nm3 * omega(emitter.lambda_zpl);
}

double coupling_ratio(const NVEmitter& emitter, const modes2d::ModeSolution2D& mode, Length diameter, double x_nm,
                      double y_nm, double n_host) {
    if (!(diameter.nm() > 0.0)) throw ValidationError("ring diameter must be > 0");
    double energy = 0.0;
    for (int j = 0; j < mode.ny(); ++j)
        for (int i = 0; i < mode.nx(); ++i) energy += mode.eps(i, j) * mode.intensity(i, j);
    energy *= mode.pitch() * mode.pitch() * kPi * diameter.nm();
    return coupling_ratio(emitter, mode.intensity_at(x_nm, y_nm), energy, n_host);
}

double kappa(double q, Length wavelength) {
    if (!(q > 0.0)) throw ValidationError("Q must be > 0");
    return omega(wavelength) / q;
}

double purcell_total(const CavityParams& p, const NVEmitter& emitter) {
    p.validate();
    emitter.validate();
    return 3.0 / (4.0 * kPi * kPi) * (p.q / p.v_cubic) * (p.n_cavity / p.n_host) * p.field_ratio_sq *
           cos2(emitter) * emitter.branching_ratio();
}

double purcell_total(double q, double volume, double wavelength, double n_cavity, double n_host,
                     double field_ratio_sq, const NVEmitter& emitter) {
    if (!(wavelength > 0.0)) throw ValidationError("wavelength must be > 0");
    const double unit = wavelength / n_cavity;
    CavityParams p{q, volume / (unit * unit * unit), n_cavity, n_host, field_ratio_sq, emitter.lambda_zpl};
    return purcell_total(p, emitter);
}

double zpl_enhancement(double f_se, const NVEmitter& emitter) {
    if (!(f_se >= 0.0)) throw ValidationError(fmt::format("F_SE must be >= 0, got {}", f_se));
    emitter.validate();
    return f_se / emitter.branching_ratio();
}

void RingSweep::validate() const {
    require_nonempty(diameters_nm, "diameters_nm", false);
    require_nonempty(depths_nm, "depths_nm", true);
    require_nonempty(membranes_nm, "membranes_nm", false);
    require_nonempty(gaps_nm, "gaps_nm", true);
    if (polarizations.empty()) throw ValidationError("sweep 'polarizations' is empty");
    if (!(alpha.inverse_meters() > 0.0)) throw ValidationError("design sweep needs a positive loss");
    emitter.validate();
    if (std::abs(emitter.lambda_zpl.nm() - wavelength.nm()) > 1e-9)
        throw ValidationError("emitter wavelength and sweep wavelength differ");
}

DesignRow evaluate_design_point(const modes2d::ModeSolution2D& mode, double diameter_nm, double depth_nm,
                                const RingSweep& sweep) {
    DesignRow r;
    r.polarization = mode.polarization();
    r.diameter_nm = diameter_nm;
    r.depth_nm = depth_nm;
    r.n_eff = mode.n_eff();
    const Length wl = Length::nanometers(mode.wavelength_nm());
    const Length d = Length::nanometers(diameter_nm);

    r.nv_y_nm = -depth_nm;
    r.nv_x_nm = modes2d::lateral_peak_x(mode, r.nv_y_nm);
    r.field_ratio_sq = modes2d::field_ratio_at_point(mode, r.nv_x_nm, r.nv_y_nm);
    const modes2d::RingVolume v = modes2d::ring_mode_volume(mode, d);
    r.v_nm3 = v.nm3;
    r.v_cubic = v.cubic_wavelengths;
    r.q = *q_from_loss(sweep.alpha, wl, mode.max_index());
    r.kappa = kappa(r.q, wl);
    r.g2_over_gamma = coupling_ratio(sweep.emitter, mode, d, r.nv_x_nm, r.nv_y_nm, sweep.waveguide.n_substrate);

    CavityParams p{r.q, r.v_cubic, mode.max_index(), sweep.waveguide.n_substrate, r.field_ratio_sq, wl};
    r.f_se = purcell_total(p, sweep.emitter);
    r.f_zpl = zpl_enhancement(r.f_se, sweep.emitter);
    return r;
}

DesignTable design_ring(const RingSweep& sweep, unsigned jobs) {
    sweep.validate();

    struct Job {
        double membrane, gap;
        Polarization pol;
        std::optional<modes2d::ModeSolution2D> mode;
        std::string error;
    };
    std::vector<Job> solves;
    for (Polarization pol : sweep.polarizations)
        for (double t : sweep.membranes_nm)
            for (double g : sweep.gaps_nm) solves.push_back({t, g, pol, std::nullopt, {}});

    parallel_for(solves.size(), jobs, [&](std::size_t k) {
        Job& job = solves[k];
        try {
            modes2d::RidgeGeometry geo = sweep.waveguide;
            geo.membrane_nm = job.membrane;
            geo.gap_nm = job.gap;
            auto mode = modes2d::solve_fundamental_2d(geo.build(), sweep.wavelength, job.pol);
            if (!mode.guided())
                job.error = fmt::format("unguided: n_eff {:.6f} <= cladding bound {:.6f}", mode.n_eff(),
                                        mode.cladding_bound());
            else
                job.mode = std::move(mode);
        } catch (const std::exception& e) {
            job.error = e.what();
        }
    });

    DesignTable table;
    table.emitter = sweep.emitter;
    for (const Job& job : solves)
        for (double dia : sweep.diameters_nm)
            for (double depth : sweep.depths_nm) {
                DesignFailure fail{job.pol, dia, depth, job.membrane, job.gap, job.error};
                if (!job.mode) {
                    table.failures.push_back(std::move(fail));
                    continue;
                }
                try {
                    DesignRow row = evaluate_design_point(*job.mode, dia, depth, sweep);
                    row.membrane_nm = job.membrane;
                    row.gap_nm = job.gap;
                    table.rows.push_back(row);
                } catch (const std::exception& e) {
                    fail.reason = e.what();
                    table.failures.push_back(std::move(fail));
                }
            }

    if (table.rows.empty()) {
        std::string why = table.failures.empty() ? "no points" : table.failures.front().reason;
        throw SolverError(fmt::format("every ring design point failed; first reason: {}", why));
    }
    auto key = [](const DesignRow& r) {
        return std::make_tuple(-r.f_se, static_cast<int>(r.polarization), r.diameter_nm, r.depth_nm, r.membrane_nm,
                               r.gap_nm);
    };
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [&](const DesignRow& a, const DesignRow& b) { return key(a) < key(b); });
    return table;
}

void write_design_csv(std::ostream& os, const DesignTable& table) {
    os << "polarization,diameter_nm,depth_nm,membrane_nm,gap_nm,n_eff,q,kappa_mhz,g2_over_gamma_mhz,"
          "gamma_total_mhz,gamma_zpl_mhz,v_nm3,v_lambda_n3,field_ratio_sq,f_se,f_zpl\n";
    const double to_mhz = 1.0 / (2.0 * kPi * 1e6);
    for (const DesignRow& r : table.rows) {
        os << fmt::format("{},{:.3f},{:.3f},{:.3f},{:.3f},{:.8f},{:.2f},{:.6f},{:.6e},{:.6f},{:.6f},{:.6e},{:.6f},"
                          "{:.6e},{:.6f},{:.6f}\n",
                          to_string(r.polarization), r.diameter_nm, r.depth_nm, r.membrane_nm, r.gap_nm, r.n_eff,
                          r.q, r.kappa * to_mhz, r.g2_over_gamma * to_mhz, table.emitter.gamma_total_hz / 1e6,
                          table.emitter.gamma_zpl_hz / 1e6, r.v_nm3, r.v_cubic, r.field_ratio_sq, r.f_se, r.f_zpl);
    }
}

} // namespace gapdiamond::cavity
