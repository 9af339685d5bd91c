#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gapdiamond/core.hpp"

namespace gapdiamond::modes2d {

// Axis-aligned rectangle in the cross-section plane (nm). x is lateral, y is
// vertical and increases upward.
struct Rect {
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
    double n = 1.0;
    std::string name;

    bool contains(double x, double y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

// Index map built from rectangles painted over a background. Later
// rectangles win on overlap. The domain is discretized into square cells of
// side `pitch`; node values live at cell centers.
class CrossSection {
public:
    CrossSection(double x0, double x1, double y0, double y1, double pitch, double background,
                 std::vector<Rect> rects = {});

    double x0() const { return x0_; }
    double x1() const { return x1_; }
    double y0() const { return y0_; }
    double y1() const { return y1_; }
    double pitch() const { return pitch_; }
    double background() const { return background_; }
    const std::vector<Rect>& rects() const { return rects_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }

    double index_at(double x, double y) const;
    double max_index() const;

    // Same geometry on a different grid pitch.
    CrossSection with_pitch(double pitch) const;

    // Vertical x-intervals over which the structure is uniform in x, left to
    // right, as (x_begin, x_end).
    std::vector<std::pair<double, double>> slices() const;
    // Layer stack seen along a vertical line at x, top cladding first. The
    // outermost intervals become semi-infinite claddings.
    LayerStack column_stack(double x) const;

private:
    double x0_, x1_, y0_, y1_, pitch_, background_;
    std::vector<Rect> rects_;
    int nx_ = 0, ny_ = 0;
};

// Ridge or rib waveguide on a (possibly etched) substrate with an optional gap
// layer. The substrate surface is at y = 0; the membrane sits above it.
struct RidgeGeometry {
    double width_nm = 1000.0;      // ridge width
    double membrane_nm = 120.0;    // membrane thickness under the ridge
    double slab_nm = 0.0;          // membrane left outside the ridge (0: fully etched)
    double gap_nm = 0.0;           // low-index layer between membrane and substrate
    double substrate_etch_nm = 0.0;  // depth of the substrate ridge under the membrane
    double substrate_ridge_width_nm = -1.0;  // <0: same as width_nm
    double padding_nm = 1000.0;
    double pitch_nm = 5.0;
    double n_membrane = materials::kGaP;
    double n_substrate = materials::kDiamond;
    double n_gap = materials::kAir;
    double n_cover = materials::kAir;

    CrossSection build() const;
};

// 1 um wide rib, 120 nm membrane, 50 nm ridge height, on diamond.
RidgeGeometry reference_rib_waveguide(double pitch_nm = 5.0);
// 300 nm x 120 nm ring waveguide on a diamond ridge etched 120 nm.
RidgeGeometry reference_ring_waveguide(double pitch_nm = 5.0);

// Which field maximum normalizes field ratios and effective areas.
enum class PeakReference {
    GlobalField,          // max |E|^2 anywhere, eps of that cell
    GlobalEnergy,         // max eps |E|^2 anywhere
    FieldPeakCavityIndex, // max |E|^2 anywhere, eps taken as n_cavity^2
};

struct Peak {
    int i = 0, j = 0;
    double intensity = 0.0;  // |E|^2 at the peak
    double eps = 1.0;        // eps used with it
};

class ModeSolution2D {
public:
    double n_eff() const { return n_eff_; }
    Polarization polarization() const { return pol_; }
    bool guided() const { return guided_; }
    double cladding_bound() const { return cladding_bound_; }
    double wavelength_nm() const { return wavelength_nm_; }
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double pitch() const { return pitch_; }
    double x_center(int i) const { return x0_ + (i + 0.5) * pitch_; }
    double y_center(int j) const { return y0_ + (j + 0.5) * pitch_; }

    // Principal field (Ex for TE, Ey for TM), normalized so that
    // sum |E|^2 * pitch^2 = 1.
    double field(int i, int j) const { return field_[idx(i, j)]; }
    double intensity(int i, int j) const { return field(i, j) * field(i, j); }
    // Cell-averaged permittivity and cell-center material index.
    double eps(int i, int j) const { return eps_avg_[idx(i, j)]; }
    double material_index(int i, int j) const { return material_[idx(i, j)]; }
    double max_index() const { return max_index_; }

    // Bilinear interpolation of |E|^2 between cell centers. Throws
    // ValidationError outside the domain.
    double intensity_at(double x_nm, double y_nm) const;

    Peak peak(PeakReference ref) const;

    // Copy with the field multiplied by `factor` (invariance tests).
    ModeSolution2D scaled(double factor) const;

    // CSV grid: x_nm,y_nm,intensity
    void write_csv(std::ostream& os) const;

private:
    friend ModeSolution2D solve_fundamental_2d(const CrossSection&, Length, Polarization);
    friend ModeSolution2D make_mode_for_test(const CrossSection&, std::vector<double>, Polarization, double);
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }

    double n_eff_ = 0.0;
    Polarization pol_ = Polarization::TE;
    bool guided_ = false;
    double cladding_bound_ = 1.0;
    double wavelength_nm_ = 0.0;
    double residual_ = 0.0;
    int iterations_ = 0;
    int nx_ = 0, ny_ = 0;
    double pitch_ = 1.0, x0_ = 0.0, y0_ = 0.0;
    double max_index_ = 1.0;
    std::vector<double> field_, eps_avg_, material_;
};

// Wraps an arbitrary principal field on the grid of `cs` (normalized on
// construction). Lets tests feed analytic fields into the area/volume code.
ModeSolution2D make_mode_for_test(const CrossSection& cs, std::vector<double> field, Polarization pol,
                                  double wavelength_nm);

// Largest-n_eff eigenpair of the semivectorial finite-difference operator.
// Returns a mode with guided() == false when n_eff does not exceed the
// cladding bound. Throws SolverError if inverse iteration stalls.
ModeSolution2D solve_fundamental_2d(const CrossSection& cs, Length wavelength, Polarization pol);

// Lowest index a laterally bound mode must exceed: substrate/cover at the
// top and bottom edges, and the slab mode (or highest index) of the outer
// columns.
double cladding_bound(const CrossSection& cs, Length wavelength, Polarization pol);

// Two-pass effective index estimate. Throws UnguidedError if a slice has
// no guided slab mode or the lateral problem does not confine.
double effective_index_method(const CrossSection& cs, Length wavelength, Polarization pol);

// sum(eps |E|^2 dA) / (eps |E|^2 at the reference peak), nm^2.
double effective_area(const ModeSolution2D& mode, PeakReference ref = PeakReference::GlobalEnergy);

struct RingVolume {
    double nm3 = 0.0;
    double cubic_wavelengths = 0.0;  // in units of (lambda / n_cavity)^3
};

// Traveling-wave ring volume A_eff * pi * D. The default reference pairs the
// global field maximum with eps = n_cavity^2, the normalization under which
// the closed-form enhancement formula equals the coupling-rate derivation.
RingVolume ring_mode_volume(const ModeSolution2D& mode, Length diameter,
                            PeakReference ref = PeakReference::FieldPeakCavityIndex);

// |E(point)|^2 / |E(reference peak)|^2.
double field_ratio_at_point(const ModeSolution2D& mode, double x_nm, double y_nm,
                            PeakReference ref = PeakReference::GlobalField);

// Lateral position of the intensity maximum along the horizontal line y.
double lateral_peak_x(const ModeSolution2D& mode, double y_nm);

} // namespace gapdiamond::modes2d
