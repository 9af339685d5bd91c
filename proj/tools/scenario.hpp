#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gapdiamond/cavity.hpp"
#include "gapdiamond/fitting.hpp"
#include "gapdiamond/modes2d.hpp"
#include "gapdiamond/slab.hpp"

namespace gapdiamond::cli {

inline constexpr int kSchemaVersion = 1;

struct RatioCurveSpec {
    std::vector<double> thicknesses_nm;
    std::vector<double> gaps_nm{0.0};
    std::vector<Polarization> polarizations{Polarization::TE, Polarization::TM};
    double window_nm = 100.0;
};

enum class FitKind { Gap, Loss };

struct FitSpec {
    std::optional<FitKind> kind;
    std::optional<std::filesystem::path> data;  // resolved against the scenario directory
    fitting::GapSearch search;
};

struct DesignPoint {
    double diameter_nm = 2500.0, depth_nm = 20.0, membrane_nm = 120.0, gap_nm = 0.0;
};

struct DesignSpec {
    cavity::RingSweep sweep;
    DesignPoint reference_point;
};

struct Mode2DSpec {
    modes2d::RidgeGeometry waveguide;
    std::vector<Polarization> polarizations{Polarization::TE, Polarization::TM};
};

struct Scenario {
    int schema_version = kSchemaVersion;
    std::string name;
    std::filesystem::path directory;
    std::map<std::string, double> materials;
    Length wavelength = kNvZplWavelength;
    slab::MembraneStack stack;
    std::optional<RatioCurveSpec> ratio_curve;
    std::optional<FitSpec> fit;
    std::optional<DesignSpec> design;
    std::optional<Mode2DSpec> mode2d;
};

// Parses and validates a scenario. Throws ValidationError naming the JSON
// pointer of the offending field.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& directory = {});
Scenario load_scenario(const std::filesystem::path& path);

} // namespace gapdiamond::cli
