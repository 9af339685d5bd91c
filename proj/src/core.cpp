#include "gapdiamond/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace gapdiamond {

double db_per_cm_to_inverse_meters(double alpha_db_per_cm) {
    if (!(alpha_db_per_cm >= 0.0))
        throw ValidationError(fmt::format("attenuation must be >= 0 dB/cm, got {}", alpha_db_per_cm));
    return alpha_db_per_cm / kDbPerNeper * 100.0;
}

double inverse_meters_to_db_per_cm(double alpha_per_meter) {
    if (!(alpha_per_meter >= 0.0))
        throw ValidationError(fmt::format("attenuation must be >= 0 1/m, got {}", alpha_per_meter));
    return alpha_per_meter * kDbPerNeper / 100.0;
}

Attenuation Attenuation::db_per_cm(double v) { return Attenuation(db_per_cm_to_inverse_meters(v)); }

double Attenuation::to_db_per_cm() const { return inverse_meters_to_db_per_cm(per_meter_); }

std::string_view to_string(Polarization pol) { return pol == Polarization::TE ? "TE" : "TM"; }

Polarization parse_polarization(std::string_view text) {
    if (text == "TE" || text == "te") return Polarization::TE;
    if (text == "TM" || text == "tm") return Polarization::TM;
    throw ValidationError(fmt::format("unknown polarization '{}', expected TE or TM", text));
}

namespace {

[[noreturn]] void violated(std::string_view rule, const std::string& detail) {
    throw ValidationError(fmt::format("LayerStack rule '{}' violated: {}", rule, detail));
}

} // namespace

LayerStack::LayerStack(std::vector<Layer> layers) {
    if (layers.size() < 2) violated("claddings", "need a top and a bottom semi-infinite layer");
    if (layers.front().is_finite() || layers.back().is_finite())
        violated("claddings", "first and last layers must be semi-infinite");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (!(l.n >= 1.0)) violated("index", fmt::format("layer {} ('{}') has n = {} < 1", i, l.name, l.n));
        if (i > 0 && i + 1 < layers.size()) {
            if (!l.is_finite())
                violated("claddings", fmt::format("interior layer {} ('{}') is semi-infinite", i, l.name));
            if (!(l.thickness->nm() >= 0.0) || !std::isfinite(l.thickness->nm()))
                violated("thickness", fmt::format("layer {} ('{}') has thickness {} nm", i, l.name,
                                                  l.thickness->nm()));
        }
    }

    std::vector<Layer> out;
    out.reserve(layers.size());
    for (auto& l : layers) {
        if (l.is_finite() && l.thickness->nm() == 0.0) continue;
        if (!out.empty() && l.is_finite() && out.back().is_finite() && out.back().n == l.n) {
            out.back().thickness = *out.back().thickness + *l.thickness;
            continue;
        }
        out.push_back(std::move(l));
    }
    if (out.size() < 3) violated("films", "at least one finite layer of nonzero thickness is required");
    layers_ = std::move(out);
}

double LayerStack::interface_nm(std::size_t i) const {
    double z = 0.0;
    for (std::size_t k = 1; k < i && k < layers_.size(); ++k) z += layers_[k].thickness->nm();
    return z;
}

double LayerStack::total_film_thickness_nm() const { return interface_nm(layers_.size() - 1); }

double LayerStack::max_cladding_index() const { return std::max(layers_.front().n, layers_.back().n); }

double LayerStack::max_film_index() const {
    double m = 0.0;
    for (std::size_t i = 1; i + 1 < layers_.size(); ++i) m = std::max(m, layers_[i].n);
    return m;
}

std::optional<std::size_t> LayerStack::find(std::string_view name) const {
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (layers_[i].name == name) return i;
    return std::nullopt;
}

LayerStack normalize_stack(std::vector<Layer> layers) { return normalize_stack(LayerStack(std::move(layers))); }

LayerStack normalize_stack(const LayerStack& stack) {
    LayerStack out(stack.layers());
    if (!out.supports_guidance())
        violated("guidance", fmt::format("max film index {} does not exceed max cladding index {}",
                                         out.max_film_index(), out.max_cladding_index()));
    return out;
}

void NVEmitter::validate() const {
    if (!(gamma_zpl_hz > 0.0) || !(gamma_zpl_hz <= gamma_total_hz))
        throw ValidationError(fmt::format("emitter rates need 0 < gamma_zpl <= gamma_total, got {} and {} Hz",
                                          gamma_zpl_hz, gamma_total_hz));
    if (!(depth.nm() >= 0.0)) throw ValidationError("emitter depth must be >= 0");
    if (!(dipole_angle >= 0.0 && dipole_angle <= std::numbers::pi / 2))
        throw ValidationError(fmt::format("dipole angle {} rad outside [0, pi/2]", dipole_angle));
    if (!(lambda_zpl.nm() > 0.0)) throw ValidationError("emitter wavelength must be > 0");
}

void PhysicalScenario::validate() const {
    if (!(wavelength.nm() > 0.0)) throw ValidationError("wavelength must be > 0");
}

} // namespace gapdiamond
