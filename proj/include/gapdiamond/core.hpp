#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gapdiamond/units.hpp"

namespace gapdiamond {

// Bad user input: invalid parameters, malformed stacks, unreadable data.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed to converge or produced an unusable result.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The structure supports no bound mode for the requested polarization.
class UnguidedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace materials {
inline constexpr double kAir = 1.0;
inline constexpr double kGaP = 3.3;
inline constexpr double kDiamond = 2.4;
// PECVD nitride; the value is not measured here, override per scenario.
inline constexpr double kSiliconNitride = 2.0;
} // namespace materials

inline constexpr Length kNvZplWavelength = Length::nanometers(637.0);

enum class Polarization { TE, TM };

std::string_view to_string(Polarization pol);
Polarization parse_polarization(std::string_view text);

struct Layer {
    std::string name;
    double n = 1.0;
    // Absent for the two semi-infinite outer layers.
    std::optional<Length> thickness;

    bool is_finite() const { return thickness.has_value(); }

    static Layer cladding(std::string name, double n) { return {std::move(name), n, std::nullopt}; }
    static Layer film(std::string name, double n, Length t) { return {std::move(name), n, t}; }

    bool operator==(const Layer&) const = default;
};

// Ordered dielectric layers, z increasing from the top cladding (index 0)
// into the bottom substrate (last index).
//
// Construction drops zero-thickness films, merges neighbouring films of equal
// index, and enforces the structural rules. Whether the stack can confine
// light at all is a separate question answered by supports_guidance().
class LayerStack {
public:
    explicit LayerStack(std::vector<Layer> layers);

    const std::vector<Layer>& layers() const { return layers_; }
    std::size_t size() const { return layers_.size(); }
    const Layer& operator[](std::size_t i) const { return layers_[i]; }
    const Layer& top() const { return layers_.front(); }
    const Layer& bottom() const { return layers_.back(); }

    // z coordinate (nm) of the top face of layer i; layer 0 extends to -inf.
    double interface_nm(std::size_t i) const;
    double total_film_thickness_nm() const;

    double max_cladding_index() const;
    double max_film_index() const;
    bool supports_guidance() const { return max_film_index() > max_cladding_index(); }

    // Index of the first layer carrying the given name, if any.
    std::optional<std::size_t> find(std::string_view name) const;

    bool operator==(const LayerStack&) const = default;

private:
    std::vector<Layer> layers_;
};

// Normalizes a raw layer list and rejects anything that cannot carry a
// guided mode. The diagnostic names the violated rule.
LayerStack normalize_stack(std::vector<Layer> layers);
LayerStack normalize_stack(const LayerStack& stack);

// Emitter parameters. Rates are in Hz (cycles/s).
struct NVEmitter {
    Length depth = Length::nanometers(20.0);
    double dipole_angle = 0.0;  // radians, between the mode field and the dipole
    double gamma_total_hz = 13e6;
    double gamma_zpl_hz = 0.35e6;
    Length lambda_zpl = kNvZplWavelength;

    void validate() const;
    double branching_ratio() const { return gamma_zpl_hz / gamma_total_hz; }
};

struct PhysicalScenario {
    Length wavelength = kNvZplWavelength;
    Polarization polarization = Polarization::TE;

    void validate() const;
};

} // namespace gapdiamond
