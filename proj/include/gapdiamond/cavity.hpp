#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gapdiamond/core.hpp"
#include "gapdiamond/modes2d.hpp"

namespace gapdiamond::cavity {

struct CavityParams {
    double q = 0.0;
    double v_cubic = 0.0;  // mode volume in (lambda / n_cavity)^3
    double n_cavity = materials::kGaP;
    double n_host = materials::kDiamond;
    double field_ratio_sq = 1.0;  // |E(r_NV)|^2 / |E(r_max)|^2
    Length wavelength = kNvZplWavelength;

    void validate() const;
};

// Loss-limited quality factor 2 pi n / (lambda alpha). A zero loss has no
// finite Q and yields nullopt. Negative loss throws ValidationError.
std::optional<double> q_from_loss(Attenuation alpha, Length wavelength, double n);

// sum(eps |E|^2) dV / max(eps |E|^2), in the unit of `cell_volume`.
double mode_volume(std::span<const double> intensity, std::span<const double> eps, double cell_volume);
// Traveling-wave ring volume (A_eff * pi * D).
modes2d::RingVolume mode_volume(const modes2d::ModeSolution2D& mode, Length diameter);

// g^2 / gamma_ZPL in rad/s for an emitter in a host of index n_host, given
// |E|^2 at the emitter and the energy integral sum(eps |E|^2 dV) in nm^3
// (same field normalization for both).
double coupling_ratio(const NVEmitter& emitter, double intensity_at_nv, double energy_nm3,
                      double n_host = materials::kDiamond);
// Ring form: energy integral is the cross-section integral times pi * D.
double coupling_ratio(const NVEmitter& emitter, const modes2d::ModeSolution2D& mode, Length diameter, double x_nm,
                      double y_nm, double n_host = materials::kDiamond);

// Cavity energy decay rate omega / Q, rad/s.
double kappa(double q, Length wavelength);

// Total spontaneous-emission enhancement, including cos^2 of the dipole angle.
double purcell_total(const CavityParams& params, const NVEmitter& emitter);
// Same with V and lambda in any one length unit.
double purcell_total(double q, double volume, double wavelength, double n_cavity, double n_host,
                     double field_ratio_sq, const NVEmitter& emitter);

// Enhancement of emission into the zero-phonon line alone.
double zpl_enhancement(double f_se, const NVEmitter& emitter);

struct RingSweep {
    std::vector<double> diameters_nm{2500.0};
    std::vector<double> depths_nm{20.0};
    std::vector<double> membranes_nm{120.0};
    std::vector<double> gaps_nm{0.0};
    std::vector<Polarization> polarizations{Polarization::TE, Polarization::TM};
    Attenuation alpha = Attenuation::db_per_cm(72.0);
    modes2d::RidgeGeometry waveguide = modes2d::reference_ring_waveguide(10.0);
    NVEmitter emitter;
    Length wavelength = kNvZplWavelength;

    void validate() const;
};

struct DesignRow {
    Polarization polarization = Polarization::TE;
    double diameter_nm = 0.0, depth_nm = 0.0, membrane_nm = 0.0, gap_nm = 0.0;
    double n_eff = 0.0;
    double q = 0.0;
    double kappa = 0.0;           // rad/s
    double g2_over_gamma = 0.0;   // rad/s
    double v_nm3 = 0.0, v_cubic = 0.0;
    double nv_x_nm = 0.0, nv_y_nm = 0.0;
    double field_ratio_sq = 0.0;
    double f_se = 0.0, f_zpl = 0.0;
};

struct DesignFailure {
    Polarization polarization = Polarization::TE;
    double diameter_nm = 0.0, depth_nm = 0.0, membrane_nm = 0.0, gap_nm = 0.0;
    std::string reason;
};

struct DesignTable {
    std::vector<DesignRow> rows;  // F_SE descending
    std::vector<DesignFailure> failures;
    NVEmitter emitter;
};

// Evaluates one ring design point from an already solved cross-section mode.
DesignRow evaluate_design_point(const modes2d::ModeSolution2D& mode, double diameter_nm, double depth_nm,
                                const RingSweep& sweep);

// Full sweep. One 2-D solve per (membrane, gap, polarization), spread over
// `jobs` workers. Throws SolverError if no point could be evaluated.
DesignTable design_ring(const RingSweep& sweep, unsigned jobs = 1);

// polarization,diameter_nm,depth_nm,membrane_nm,gap_nm,n_eff,q,kappa_mhz,
// g2_over_gamma_mhz,gamma_total_mhz,gamma_zpl_mhz,v_nm3,v_lambda_n3,
// field_ratio_sq,f_se,f_zpl. Rates are divided by 2 pi.
void write_design_csv(std::ostream& os, const DesignTable& table);

} // namespace gapdiamond::cavity
