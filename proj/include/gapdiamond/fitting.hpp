#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gapdiamond/core.hpp"
#include "gapdiamond/slab.hpp"

namespace gapdiamond::fitting {

// Photoluminescence intensity sampled along a waveguide.
struct DecayTrace {
    std::vector<double> positions_nm;
    std::vector<double> intensities;
    std::optional<std::vector<double>> sigma;  // per-point intensity uncertainty

    void validate() const;
};

struct Parameter {
    std::string name;
    double value = 0.0;
    double std_error = 0.0;
};

struct FitResult {
    std::vector<Parameter> params;
    double sse = 0.0;  // residual sum of squares (weighted if sigmas were given)
    int dof = 0;
    double tss = 0.0;  // total sum of squares about the mean, for R^2
    std::optional<double> chi2;
    std::vector<std::string> warnings;

    const Parameter& param(std::string_view name) const;
};

struct DecayFit {
    FitResult fit;
    double alpha_per_m = 0.0;
    double alpha_se_per_m = 0.0;
    double i0 = 0.0;
    bool gain = false;  // negative alpha

    double alpha_db_per_cm() const { return alpha_per_m * kDbPerNeper / 100.0; }
    double alpha_se_db_per_cm() const { return alpha_se_per_m * kDbPerNeper / 100.0; }
};

// Straight-line least squares of ln(I) against position; slope = -alpha.
// With sigmas the fit is weighted by (I/sigma)^2 and chi^2 is reported.
DecayFit fit_exponential_decay(const DecayTrace& trace);

struct GoodnessOfFit {
    std::optional<double> r_squared;
    std::optional<double> reduced_chi2;
};

GoodnessOfFit goodness_of_fit(const FitResult& result);

// One measured field-strength ratio.
struct RatioDatum {
    double thickness_nm = 0.0;
    double ratio = 0.0;
    Polarization polarization = Polarization::TE;
};

struct GapSearch {
    double lower_nm = 0.0;
    double upper_nm = 50.0;
    double tolerance_nm = 0.01;
    Length window = Length::nanometers(100.0);
    Length wavelength = kNvZplWavelength;
};

struct GapFit {
    FitResult fit;
    double gap_nm = 0.0;
    double gap_se_nm = 0.0;
    // Bracket widths after each golden-section step.
    std::vector<double> bracket_history;
};

// Sum of squared ratio residuals for a trial gap. Returns +inf when some
// polarization has no guided mode at that gap; other model failures throw
// SolverError naming the thickness.
double gap_objective(std::span<const RatioDatum> data, const slab::MembraneStack& tmpl, double gap_nm,
                     const GapSearch& search = {}, unsigned jobs = 1);

// Bounded golden-section fit of the gap layer thickness. Throws SolverError
// ("unidentifiable") when the objective does not depend on the gap.
GapFit fit_air_gap(std::span<const RatioDatum> data, const slab::MembraneStack& tmpl, const GapSearch& search = {},
                   unsigned jobs = 1);

// CSV ingestion. Blank lines and lines starting with '#' are skipped, as is a
// first line that does not start with a number. Errors carry line numbers.
// Decay: position_nm,intensity[,sigma]
DecayTrace read_decay_csv(std::istream& in);
// Ratios: thickness_nm,ratio,polarization
std::vector<RatioDatum> read_ratio_csv(std::istream& in);

} // namespace gapdiamond::fitting
