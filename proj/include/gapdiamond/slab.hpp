#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gapdiamond/core.hpp"

namespace gapdiamond::slab {

inline constexpr const char* kMembraneLayer = "GaP";
inline constexpr const char* kSubstrateLayer = "diamond";
inline constexpr const char* kGapLayer = "gap";

// Field at one z. `principal` is Ey (TE) or Hy (TM) and `principal_dz` its
// z-derivative. For TM the electric components are expressed in units of the
// magnetic field divided by omega*eps0 (a common factor dropped everywhere).
struct FieldSample {
    double principal = 0.0;
    double principal_dz = 0.0;
    double ey = 0.0;  // TE only
    double ex = 0.0;  // TM, tangential (along propagation)
    double ez = 0.0;  // TM, normal to the layers

    double intensity() const { return ey * ey + ex * ex + ez * ez; }
};

// A guided mode of a LayerStack. Fields are analytic within each layer
// (cos/sin or cosh/sinh), scaled so that the integral of |E|^2 over the whole
// z axis (nm) is 1.
class ModeSolution1D {
public:
    double n_eff() const { return n_eff_; }
    Polarization polarization() const { return pol_; }
    int order() const { return order_; }
    double wavelength_nm() const { return wavelength_nm_; }
    const LayerStack& stack() const { return stack_; }
    // Field decay constants (1/nm) in the top and bottom claddings.
    double decay_top() const { return decay_top_; }
    double decay_bottom() const { return decay_bottom_; }

    FieldSample at(double z_nm) const;
    // Evaluates using the formula of `layer` even outside its extent; used to
    // compare the two one-sided limits at an interface.
    FieldSample at_in_layer(std::size_t layer, double z_nm) const;
    std::size_t layer_at(double z_nm) const;

    // Rescales the stored field. Intended for invariance checks only.
    ModeSolution1D scaled(double factor) const;

private:
    friend std::vector<ModeSolution1D> find_guided_modes(const LayerStack&, Length, Polarization);
    ModeSolution1D(LayerStack stack, double wavelength_nm, Polarization pol, double n_eff);

    LayerStack stack_;
    double wavelength_nm_ = 0.0;
    Polarization pol_ = Polarization::TE;
    double n_eff_ = 0.0;
    int order_ = 0;
    double decay_top_ = 0.0;
    double decay_bottom_ = 0.0;
    // Principal field and its derivative at the top face of each layer.
    std::vector<double> u0_;
    std::vector<double> du0_;
};

// Normalized transfer-matrix dispersion function. Its zeros in
// (max cladding index, max film index) are the guided modes; the value lies in
// [-1, 1].
double dispersion_residual(const LayerStack& stack, Length wavelength, Polarization pol, double n_eff);

// All guided modes ordered by decreasing n_eff. Empty when the stack cannot
// confine light. Throws SolverError if a bracketed root fails to converge.
std::vector<ModeSolution1D> find_guided_modes(const LayerStack& stack, Length wavelength, Polarization pol);

// Fundamental mode or UnguidedError.
ModeSolution1D fundamental_mode(const LayerStack& stack, Length wavelength, Polarization pol);

struct SampledProfile {
    std::vector<double> z_nm;
    std::vector<double> ey;
    std::vector<double> ex;
    std::vector<double> ez;
    std::vector<double> intensity;
};

SampledProfile field_profile(const ModeSolution1D& mode, std::pair<double, double> z_window_nm, std::size_t samples);

// Integral of |E|^2 over [z0, z1] (nm). Either bound may be infinite.
double region_intensity(const ModeSolution1D& mode, double z0_nm, double z1_nm);

// sqrt(intensity in the top `window` of the substrate / intensity in the
// membrane) for the fundamental mode. The stack must contain exactly one
// layer named "GaP" and end in a semi-infinite layer named "diamond".
double penetration_ratio(const LayerStack& stack, Length wavelength, Polarization pol,
                         Length window = Length::nanometers(100.0));
double penetration_ratio(const ModeSolution1D& mode, Length window = Length::nanometers(100.0));

// cover | [cladding film] | membrane | gap | substrate
struct MembraneStack {
    double n_cover = materials::kAir;
    std::optional<Layer> top_cladding;
    double n_membrane = materials::kGaP;
    double n_gap = materials::kAir;
    double n_substrate = materials::kDiamond;

    LayerStack build(Length membrane, Length gap) const;
};

struct RatioPoint {
    double thickness_nm = 0.0;
    double ratio = 0.0;
};

struct RatioCurve {
    Polarization polarization = Polarization::TE;
    double gap_nm = 0.0;
    std::vector<RatioPoint> points;
    // Thicknesses that could not be evaluated, with the reason.
    std::vector<std::pair<double, std::string>> failures;
};

RatioCurve ratio_curve(const std::vector<Length>& thicknesses, Length gap, Length wavelength, Polarization pol,
                       const MembraneStack& tmpl = {}, Length window = Length::nanometers(100.0),
                       unsigned jobs = 1);

} // namespace gapdiamond::slab
