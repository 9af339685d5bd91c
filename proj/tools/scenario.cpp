#include "scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace gapdiamond::cli {

namespace {

using json = nlohmann::json;

std::string escape_pointer(std::string_view key) {
    std::string out;
    for (char c : key) {
        if (c == '~')
            out += "~0";
        else if (c == '/')
            out += "~1";
        else
            out += c;
    }
    return out;
}

[[noreturn]] void fail(const std::string& ptr, const std::string& msg) {
    throw ValidationError(fmt::format("scenario {}: {}", ptr.empty() ? "/" : ptr, msg));
}

// A JSON value together with its pointer, for located diagnostics.
class Node {
public:
    Node(const json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {}

    const std::string& ptr() const { return ptr_; }

    const Node& object(std::initializer_list<std::string_view> allowed) const {
        if (!j_.is_object()) fail(ptr_, "expected an object");
        for (const auto& [key, value] : j_.items()) {
            bool ok = false;
            for (auto a : allowed) ok = ok || a == key;
            if (!ok) fail(ptr_ + "/" + escape_pointer(key), "unknown field");
        }
        return *this;
    }

    std::optional<Node> get(std::string_view key) const {
        auto it = j_.find(std::string(key));
        if (it == j_.end()) return std::nullopt;
        return Node(*it, ptr_ + "/" + escape_pointer(key));
    }

    Node require(std::string_view key) const {
        auto n = get(key);
        if (!n) fail(ptr_, fmt::format("missing required field '{}'", key));
        return *n;
    }

    double number() const {
        if (!j_.is_number()) fail(ptr_, "expected a number");
        const double v = j_.get<double>();
        if (!std::isfinite(v)) fail(ptr_, "expected a finite number");
        return v;
    }

    double number(double lo, double hi, bool lo_open = false) const {
        const double v = number();
        if (v < lo || v > hi || (lo_open && v == lo))
            fail(ptr_, fmt::format("value {} outside {}{}, {}]", v, lo_open ? "(" : "[", lo, hi));
        return v;
    }

    std::string string() const {
        if (!j_.is_string()) fail(ptr_, "expected a string");
        return j_.get<std::string>();
    }

    int integer() const {
        if (!j_.is_number_integer()) fail(ptr_, "expected an integer");
        return j_.get<int>();
    }

    const json& raw() const { return j_; }

    std::vector<Node> array(bool allow_empty = false) const {
        if (!j_.is_array()) fail(ptr_, "expected an array");
        if (!allow_empty && j_.empty()) fail(ptr_, "must not be empty");
        std::vector<Node> out;
        for (std::size_t i = 0; i < j_.size(); ++i) out.emplace_back(j_[i], fmt::format("{}/{}", ptr_, i));
        return out;
    }

    // Non-empty list of lengths >= lo (nm).
    std::vector<double> lengths(double lo = 0.0, bool lo_open = false) const {
        std::vector<double> out;
        for (const Node& n : array()) out.push_back(n.number(lo, 1e9, lo_open));
        return out;
    }

private:
    const json& j_;
    std::string ptr_;
};

constexpr double kMaxLength = 1e9;

std::vector<double> parse_sweep(const Node& n, bool increasing) {
    std::vector<double> out;
    if (n.raw().is_object()) {
        n.object({"start", "stop", "step"});
        const double start = n.require("start").number(0.0, kMaxLength);
        const double stop = n.require("stop").number(0.0, kMaxLength);
        const double step = n.require("step").number(0.0, kMaxLength, true);
        if (stop < start) fail(n.ptr(), "stop must be >= start");
        const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
        if (count > 100000) fail(n.ptr(), "sweep has too many points");
        for (long k = 0; k < count; ++k) out.push_back(start + static_cast<double>(k) * step);
    } else {
        out = n.lengths();
    }
    if (increasing)
        for (std::size_t i = 1; i < out.size(); ++i)
            if (!(out[i] > out[i - 1])) fail(n.ptr(), "values must be strictly increasing");
    return out;
}

std::vector<Polarization> parse_polarizations(const Node& n) {
    std::vector<Polarization> out;
    for (const Node& item : n.array()) {
        try {
            out.push_back(parse_polarization(item.string()));
        } catch (const ValidationError& e) {
            fail(item.ptr(), e.what());
        }
    }
    return out;
}

double material(const Scenario& s, const Node& n) {
    const std::string name = n.string();
    auto it = s.materials.find(name);
    if (it == s.materials.end()) fail(n.ptr(), fmt::format("unknown material '{}'", name));
    return it->second;
}

void parse_stack(Scenario& s, const Node& n) {
    n.object({"cover", "membrane", "gap", "substrate", "top_cladding"});
    if (auto v = n.get("cover")) s.stack.n_cover = material(s, *v);
    if (auto v = n.get("membrane")) s.stack.n_membrane = material(s, *v);
    if (auto v = n.get("gap")) s.stack.n_gap = material(s, *v);
    if (auto v = n.get("substrate")) s.stack.n_substrate = material(s, *v);
    if (auto v = n.get("top_cladding")) {
        v->object({"material", "thickness_nm"});
        const Node m = v->require("material");
        const double idx = material(s, m);
        const double t = v->require("thickness_nm").number(0.0, kMaxLength, true);
        s.stack.top_cladding = Layer::film(m.string(), idx, Length::nanometers(t));
    }
}

modes2d::RidgeGeometry parse_waveguide(const Scenario& s, const Node& n) {
    n.object({"preset", "width_nm", "membrane_nm", "slab_nm", "gap_nm", "substrate_etch_nm",
              "substrate_ridge_width_nm", "padding_nm", "pitch_nm"});
    modes2d::RidgeGeometry g;
    if (auto p = n.get("preset")) {
        const std::string name = p->string();
        if (name == "rib-1um")
            g = modes2d::reference_rib_waveguide();
        else if (name == "ring-300nm")
            g = modes2d::reference_ring_waveguide();
        else
            fail(p->ptr(), fmt::format("unknown preset '{}' (rib-1um, ring-300nm)", name));
    }
    if (auto v = n.get("width_nm")) g.width_nm = v->number(0.0, kMaxLength, true);
    if (auto v = n.get("membrane_nm")) g.membrane_nm = v->number(0.0, kMaxLength, true);
    if (auto v = n.get("slab_nm")) g.slab_nm = v->number(0.0, kMaxLength);
    if (auto v = n.get("gap_nm")) g.gap_nm = v->number(0.0, kMaxLength);
    if (auto v = n.get("substrate_etch_nm")) g.substrate_etch_nm = v->number(0.0, kMaxLength);
    if (auto v = n.get("substrate_ridge_width_nm")) g.substrate_ridge_width_nm = v->number(0.0, kMaxLength, true);
    if (auto v = n.get("padding_nm")) g.padding_nm = v->number(0.0, kMaxLength, true);
    if (auto v = n.get("pitch_nm")) g.pitch_nm = v->number(0.0, kMaxLength, true);
    if (g.slab_nm > g.membrane_nm) fail(n.ptr() + "/slab_nm", "slab must not exceed the membrane thickness");
    g.n_membrane = s.stack.n_membrane;
    g.n_substrate = s.stack.n_substrate;
    g.n_gap = s.stack.n_gap;
    g.n_cover = s.stack.n_cover;
    return g;
}

NVEmitter parse_emitter(const Node& n) {
    n.object({"dipole_angle_rad", "gamma_total_mhz", "gamma_zpl_mhz"});
    NVEmitter e;
    if (auto v = n.get("dipole_angle_rad")) e.dipole_angle = v->number(0.0, std::numbers::pi / 2);
    if (auto v = n.get("gamma_total_mhz")) e.gamma_total_hz = v->number(0.0, 1e9, true) * 1e6;
    if (auto v = n.get("gamma_zpl_mhz")) e.gamma_zpl_hz = v->number(0.0, 1e9, true) * 1e6;
    if (e.gamma_zpl_hz > e.gamma_total_hz) fail(n.ptr(), "gamma_zpl_mhz must not exceed gamma_total_mhz");
    return e;
}

} // namespace

Scenario parse_scenario(const std::string& text, const std::filesystem::path& directory) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(fmt::format("scenario is not valid JSON (byte {}): {}", e.byte, e.what()));
    }
    Scenario s;
    s.directory = directory;
    s.materials = {{"air", materials::kAir},
                   {"GaP", materials::kGaP},
                   {"diamond", materials::kDiamond},
                   {"SiN", materials::kSiliconNitride}};

    const Node root(doc, "");
    root.object({"schema_version", "name", "materials", "wavelength_nm", "stack", "ratio_curve", "fit", "design",
                 "mode2d"});
    const Node ver = root.require("schema_version");
    s.schema_version = ver.integer();
    if (s.schema_version != kSchemaVersion)
        fail(ver.ptr(), fmt::format("unsupported schema version {} (expected {})", s.schema_version, kSchemaVersion));
    if (auto v = root.get("name")) s.name = v->string();
    if (auto m = root.get("materials")) {
        if (!m->raw().is_object()) fail(m->ptr(), "expected an object");
        for (const auto& [key, value] : m->raw().items())
            s.materials[key] = Node(value, m->ptr() + "/" + escape_pointer(key)).number(1.0, 10.0);
    }
    if (auto v = root.get("wavelength_nm")) s.wavelength = Length::nanometers(v->number(0.0, kMaxLength, true));
    if (auto v = root.get("stack")) parse_stack(s, *v);

    if (auto n = root.get("ratio_curve")) {
        n->object({"thicknesses_nm", "gaps_nm", "polarizations", "window_nm"});
        RatioCurveSpec r;
        r.thicknesses_nm = parse_sweep(n->require("thicknesses_nm"), true);
        if (auto v = n->get("gaps_nm")) r.gaps_nm = v->lengths();
        if (auto v = n->get("polarizations")) r.polarizations = parse_polarizations(*v);
        if (auto v = n->get("window_nm")) r.window_nm = v->number(0.0, kMaxLength);
        s.ratio_curve = std::move(r);
    }

    if (auto n = root.get("fit")) {
        n->object({"kind", "data", "gap_bounds_nm", "tolerance_nm", "window_nm"});
        FitSpec f;
        if (auto v = n->get("kind")) {
            const std::string k = v->string();
            if (k == "gap")
                f.kind = FitKind::Gap;
            else if (k == "loss")
                f.kind = FitKind::Loss;
            else
                fail(v->ptr(), fmt::format("unknown fit kind '{}' (gap, loss)", k));
        }
        if (auto v = n->get("data")) f.data = directory / v->string();
        if (auto v = n->get("gap_bounds_nm")) {
            const auto b = v->lengths();
            if (b.size() != 2 || !(b[1] > b[0])) fail(v->ptr(), "expected [lower, upper] with lower < upper");
            f.search.lower_nm = b[0];
            f.search.upper_nm = b[1];
        }
        if (auto v = n->get("tolerance_nm")) f.search.tolerance_nm = v->number(0.0, 10.0, true);
        if (auto v = n->get("window_nm")) f.search.window = Length::nanometers(v->number(0.0, kMaxLength));
        f.search.wavelength = s.wavelength;
        s.fit = std::move(f);
    }

    if (auto n = root.get("design")) {
        n->object({"diameters_nm", "depths_nm", "membranes_nm", "gaps_nm", "polarizations", "alpha_db_per_cm",
                   "waveguide", "emitter", "reference_point"});
        DesignSpec d;
        d.sweep.wavelength = s.wavelength;
        d.sweep.diameters_nm = n->require("diameters_nm").lengths(0.0, true);
        d.sweep.depths_nm = n->require("depths_nm").lengths();
        if (auto v = n->get("membranes_nm")) d.sweep.membranes_nm = v->lengths(0.0, true);
        if (auto v = n->get("gaps_nm")) d.sweep.gaps_nm = v->lengths();
        if (auto v = n->get("polarizations")) d.sweep.polarizations = parse_polarizations(*v);
        d.sweep.alpha = Attenuation::db_per_cm(n->require("alpha_db_per_cm").number(0.0, 1e6, true));
        if (auto v = n->get("waveguide"))
            d.sweep.waveguide = parse_waveguide(s, *v);
        else
            d.sweep.waveguide = parse_waveguide(s, Node(json{{"preset", "ring-300nm"}}, n->ptr() + "/waveguide"));
        if (auto v = n->get("emitter")) d.sweep.emitter = parse_emitter(*v);
        d.sweep.emitter.lambda_zpl = s.wavelength;
        if (auto v = n->get("reference_point")) {
            v->object({"diameter_nm", "depth_nm", "membrane_nm", "gap_nm"});
            if (auto w = v->get("diameter_nm")) d.reference_point.diameter_nm = w->number(0.0, kMaxLength, true);
            if (auto w = v->get("depth_nm")) d.reference_point.depth_nm = w->number(0.0, kMaxLength);
            if (auto w = v->get("membrane_nm")) d.reference_point.membrane_nm = w->number(0.0, kMaxLength, true);
            if (auto w = v->get("gap_nm")) d.reference_point.gap_nm = w->number(0.0, kMaxLength);
        }
        s.design = std::move(d);
    }

    if (auto n = root.get("mode2d")) {
        n->object({"waveguide", "polarizations"});
        Mode2DSpec m;
        m.waveguide = parse_waveguide(s, n->require("waveguide"));
        if (auto v = n->get("polarizations")) m.polarizations = parse_polarizations(*v);
        s.mode2d = std::move(m);
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(fmt::format("cannot open scenario file '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_scenario(ss.str(), path.parent_path());
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

} // namespace gapdiamond::cli
