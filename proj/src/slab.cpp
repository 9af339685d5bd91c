#include "gapdiamond/slab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "gapdiamond/parallel.hpp"

namespace gapdiamond::slab {

namespace {

constexpr double kScanStep = 1e-4;
constexpr double kBisectTol = 1e-13;
constexpr int kBisectMaxIter = 200;

double wavenumber(double wavelength_nm) { return 2.0 * std::numbers::pi / wavelength_nm; }

// Weight p in the continuity condition on p*dU/dz.
double flux_weight(Polarization pol, double n) { return pol == Polarization::TE ? 1.0 : 1.0 / (n * n); }

struct State {
    double u;
    double du;
};

// Solution of U'' = -q U after a distance d, starting from (u, du).
State propagate(double q, double d, State s) {
    double c, sn;  // C(d) and S(d) = sin(kd)/k
    const double x = q * d * d;
    if (std::abs(x) < 1e-8) {
        c = 1.0 - x / 2.0 + x * x / 24.0;
        sn = d * (1.0 - x / 6.0 + x * x / 120.0);
    } else if (q > 0.0) {
        const double k = std::sqrt(q);
        c = std::cos(k * d);
        sn = std::sin(k * d) / k;
    } else {
        const double g = std::sqrt(-q);
        c = std::cosh(g * d);
        sn = std::sinh(g * d) / g;
    }
    return {s.u * c + s.du * sn, -q * s.u * sn + s.du * c};
}

struct Shooting {
    std::vector<double> u0, du0;  // at the top face of each layer (layer 0: at z = 0)
    double gamma_top = 0.0, gamma_bottom = 0.0;
    double residual = 0.0;
};

Shooting shoot(const LayerStack& stack, double k0, Polarization pol, double n_eff) {
    const std::size_t N = stack.size();
    Shooting out;
    out.u0.resize(N);
    out.du0.resize(N);
    const double ne2 = n_eff * n_eff;
    out.gamma_top = k0 * std::sqrt(std::max(0.0, ne2 - stack.top().n * stack.top().n));
    out.gamma_bottom = k0 * std::sqrt(std::max(0.0, ne2 - stack.bottom().n * stack.bottom().n));

    State s{1.0, out.gamma_top};
    out.u0[0] = s.u;
    out.du0[0] = s.du;
    for (std::size_t j = 1; j < N; ++j) {
        s.du *= flux_weight(pol, stack[j - 1].n) / flux_weight(pol, stack[j].n);
        out.u0[j] = s.u;
        out.du0[j] = s.du;
        if (j + 1 < N) {
            const double q = k0 * k0 * (stack[j].n * stack[j].n - ne2);
            s = propagate(q, stack[j].thickness->nm(), s);
        }
    }
    const double a = out.gamma_bottom * s.u;
    const double b = s.du;
    out.residual = (a + b) / (std::abs(a) + std::abs(b));
    // On a guided mode the bottom field is a pure decaying exponential.
    out.du0[N - 1] = -out.gamma_bottom * s.u;
    return out;
}

// |E|^2 = weight * U^2 in a cladding where U is a pure exponential.
double cladding_intensity_weight(Polarization pol, double n, double gamma, double beta) {
    if (pol == Polarization::TE) return 1.0;
    return (gamma * gamma + beta * beta) / (n * n * n * n);
}

} // namespace

double dispersion_residual(const LayerStack& stack, Length wavelength, Polarization pol, double n_eff) {
    return shoot(stack, wavenumber(wavelength.nm()), pol, n_eff).residual;
}

ModeSolution1D::ModeSolution1D(LayerStack stack, double wavelength_nm, Polarization pol, double n_eff)
    : stack_(std::move(stack)), wavelength_nm_(wavelength_nm), pol_(pol), n_eff_(n_eff) {
    const Shooting s = shoot(stack_, wavenumber(wavelength_nm_), pol_, n_eff_);
    u0_ = s.u0;
    du0_ = s.du0;
    decay_top_ = s.gamma_top;
    decay_bottom_ = s.gamma_bottom;

    const double norm = region_intensity(*this, -std::numeric_limits<double>::infinity(),
                                         std::numeric_limits<double>::infinity());
    const double scale = 1.0 / std::sqrt(norm);
    for (auto& v : u0_) v *= scale;
    for (auto& v : du0_) v *= scale;

    // Node count of the principal field over the films.
    int nodes = 0;
    double prev = at(0.0).principal;
    for (std::size_t j = 1; j + 1 < stack_.size(); ++j) {
        const double top = stack_.interface_nm(j);
        const double d = stack_[j].thickness->nm();
        constexpr int kSamples = 400;
        for (int k = 1; k <= kSamples; ++k) {
            const double v = at_in_layer(j, top + d * k / kSamples).principal;
            if ((v > 0.0 && prev < 0.0) || (v < 0.0 && prev > 0.0)) ++nodes;
            if (v != 0.0) prev = v;
        }
    }
    order_ = nodes;
}

std::size_t ModeSolution1D::layer_at(double z_nm) const {
    if (z_nm < 0.0) return 0;
    for (std::size_t j = 1; j + 1 < stack_.size(); ++j)
        if (z_nm < stack_.interface_nm(j + 1)) return j;
    return stack_.size() - 1;
}

FieldSample ModeSolution1D::at(double z_nm) const { return at_in_layer(layer_at(z_nm), z_nm); }

FieldSample ModeSolution1D::at_in_layer(std::size_t j, double z_nm) const {
    const double k0 = wavenumber(wavelength_nm_);
    const double n = stack_[j].n;
    State s;
    if (j == 0) {
        const double e = std::exp(decay_top_ * z_nm);
        s = {u0_[0] * e, decay_top_ * u0_[0] * e};
    } else if (j + 1 == stack_.size()) {
        const double e = std::exp(-decay_bottom_ * (z_nm - stack_.total_film_thickness_nm()));
        s = {u0_[j] * e, -decay_bottom_ * u0_[j] * e};
    } else {
        const double q = k0 * k0 * (n * n - n_eff_ * n_eff_);
        s = propagate(q, z_nm - stack_.interface_nm(j), {u0_[j], du0_[j]});
    }
    FieldSample f;
    f.principal = s.u;
    f.principal_dz = s.du;
    if (pol_ == Polarization::TE) {
        f.ey = s.u;
    } else {
        const double beta = k0 * n_eff_;
        f.ex = s.du / (n * n);
        f.ez = beta * s.u / (n * n);
    }
    return f;
}

ModeSolution1D ModeSolution1D::scaled(double factor) const {
    ModeSolution1D out = *this;
    for (auto& v : out.u0_) v *= factor;
    for (auto& v : out.du0_) v *= factor;
    return out;
}

double region_intensity(const ModeSolution1D& mode, double z0, double z1) {
    if (!(z0 <= z1)) throw ValidationError(fmt::format("region [{}, {}] nm is reversed", z0, z1));
    const LayerStack& st = mode.stack();
    const std::size_t N = st.size();
    const double beta = wavenumber(mode.wavelength_nm()) * mode.n_eff();
    const double Z = st.total_film_thickness_nm();
    double total = 0.0;

    // Top cladding, z < 0: I(z) = I(0) e^{2 g z}.
    if (z0 < 0.0) {
        const double g = mode.decay_top();
        const double b = std::min(z1, 0.0);
        const double u = mode.at_in_layer(0, 0.0).principal;
        const double w = cladding_intensity_weight(mode.polarization(), st.top().n, g, beta);
        const double ea = std::isinf(z0) ? 0.0 : std::exp(2.0 * g * z0);
        total += w * u * u * (std::exp(2.0 * g * b) - ea) / (2.0 * g);
    }
    // Bottom cladding, z > Z: I(z) = I(Z) e^{-2 g (z - Z)}.
    if (z1 > Z) {
        const double g = mode.decay_bottom();
        const double a = std::max(z0, Z);
        const double u = mode.at_in_layer(N - 1, Z).principal;
        const double w = cladding_intensity_weight(mode.polarization(), st.bottom().n, g, beta);
        const double eb = std::isinf(z1) ? 0.0 : std::exp(-2.0 * g * (z1 - Z));
        total += w * u * u * (std::exp(-2.0 * g * (a - Z)) - eb) / (2.0 * g);
    }
    for (std::size_t j = 1; j + 1 < N; ++j) {
        const double a = std::max(z0, st.interface_nm(j));
        const double b = std::min(z1, st.interface_nm(j + 1));
        if (!(a < b)) continue;
        auto f = [&](double z) { return mode.at_in_layer(j, z).intensity(); };
        double err = 0.0;
        const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12, &err);
        total += val;
    }
    return total;
}

std::vector<ModeSolution1D> find_guided_modes(const LayerStack& stack, Length wavelength, Polarization pol) {
    if (!(wavelength.nm() > 0.0)) throw ValidationError("wavelength must be > 0");
    std::vector<ModeSolution1D> modes;
    if (!stack.supports_guidance()) return modes;

    const double k0 = wavenumber(wavelength.nm());
    const double lo = stack.max_cladding_index();
    const double hi = stack.max_film_index();
    auto f = [&](double n) { return shoot(stack, k0, pol, n).residual; };

    std::vector<double> roots;
    const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / kScanStep));
    double n_prev = hi;
    double f_prev = f(n_prev);
    // Scan downward from the core index so roots come out in decreasing n_eff.
    for (std::size_t k = 1; k <= steps; ++k) {
        const double n = std::max(lo, hi - static_cast<double>(k) * kScanStep);
        const double fv = f(n);
        if (fv == 0.0) {
            if (n > lo) roots.push_back(n);
        } else if (f_prev != 0.0 && std::signbit(fv) != std::signbit(f_prev)) {
            double a = n, b = n_prev, fa = fv;
            int it = 0;
            while (b - a > kBisectTol && it < kBisectMaxIter) {
                const double m = 0.5 * (a + b);
                const double fm = f(m);
                if (fm == 0.0) {
                    a = b = m;
                    break;
                }
                if (std::signbit(fm) == std::signbit(fa)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
                ++it;
            }
            if (b - a > kBisectTol)
                throw SolverError(fmt::format("bisection did not converge in [{}, {}] for {} mode", a, b,
                                              to_string(pol)));
            roots.push_back(0.5 * (a + b));
        }
        n_prev = n;
        f_prev = fv;
    }

    modes.reserve(roots.size());
    for (double r : roots) {
        if (r <= lo || r >= hi) continue;
        modes.push_back(ModeSolution1D(stack, wavelength.nm(), pol, r));
    }
    return modes;
}

ModeSolution1D fundamental_mode(const LayerStack& stack, Length wavelength, Polarization pol) {
    auto modes = find_guided_modes(stack, wavelength, pol);
    if (modes.empty())
        throw UnguidedError(fmt::format("stack supports no guided {} mode at {} nm", to_string(pol),
                                        wavelength.nm()));
    return std::move(modes.front());
}

SampledProfile field_profile(const ModeSolution1D& mode, std::pair<double, double> window, std::size_t samples) {
    if (samples < 2) throw ValidationError("field_profile needs at least 2 samples");
    if (!std::isfinite(window.first) || !std::isfinite(window.second) || !(window.first < window.second))
        throw ValidationError("field_profile window must be finite and increasing");
    SampledProfile p;
    p.z_nm.resize(samples);
    p.ey.resize(samples);
    p.ex.resize(samples);
    p.ez.resize(samples);
    p.intensity.resize(samples);
    const double dz = (window.second - window.first) / static_cast<double>(samples - 1);
    for (std::size_t i = 0; i < samples; ++i) {
        const double z = window.first + dz * static_cast<double>(i);
        const FieldSample f = mode.at(z);
        p.z_nm[i] = z;
        p.ey[i] = f.ey;
        p.ex[i] = f.ex;
        p.ez[i] = f.ez;
        p.intensity[i] = f.intensity();
    }
    return p;
}

double penetration_ratio(const ModeSolution1D& mode, Length window) {
    const LayerStack& st = mode.stack();
    if (!(window.nm() >= 0.0)) throw ValidationError("penetration window must be >= 0");
    std::size_t membranes = 0;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < st.size(); ++i)
        if (st[i].name == kMembraneLayer) {
            ++membranes;
            idx = i;
        }
    if (membranes != 1 || !st[idx].is_finite())
        throw ValidationError(fmt::format("stack must contain exactly one finite '{}' layer", kMembraneLayer));
    if (st.bottom().name != kSubstrateLayer)
        throw ValidationError(fmt::format("stack must end in a semi-infinite '{}' layer", kSubstrateLayer));

    const double Z = st.total_film_thickness_nm();
    const double sub = region_intensity(mode, Z, Z + window.nm());
    const double core = region_intensity(mode, st.interface_nm(idx), st.interface_nm(idx + 1));
    return std::sqrt(sub / core);
}

double penetration_ratio(const LayerStack& stack, Length wavelength, Polarization pol, Length window) {
    return penetration_ratio(fundamental_mode(stack, wavelength, pol), window);
}

LayerStack MembraneStack::build(Length membrane, Length gap) const {
    std::vector<Layer> layers;
    layers.push_back(Layer::cladding("cover", n_cover));
    if (top_cladding) layers.push_back(*top_cladding);
    layers.push_back(Layer::film(kMembraneLayer, n_membrane, membrane));
    layers.push_back(Layer::film(kGapLayer, n_gap, gap));
    layers.push_back(Layer::cladding(kSubstrateLayer, n_substrate));
    return LayerStack(std::move(layers));
}

RatioCurve ratio_curve(const std::vector<Length>& thicknesses, Length gap, Length wavelength, Polarization pol,
                       const MembraneStack& tmpl, Length window, unsigned jobs) {
    if (thicknesses.empty()) throw ValidationError("ratio_curve needs at least one thickness");
    for (std::size_t i = 1; i < thicknesses.size(); ++i)
        if (!(thicknesses[i - 1] < thicknesses[i]))
            throw ValidationError("ratio_curve thicknesses must be strictly increasing");

    struct Slot {
        double ratio = 0.0;
        std::string error;
    };
    std::vector<Slot> slots(thicknesses.size());
    parallel_for(thicknesses.size(), jobs, [&](std::size_t i) {
        try {
            slots[i].ratio = penetration_ratio(tmpl.build(thicknesses[i], gap), wavelength, pol, window);
        } catch (const std::exception& e) {
            slots[i].error = e.what();
        }
    });

    RatioCurve curve;
    curve.polarization = pol;
    curve.gap_nm = gap.nm();
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].error.empty())
            curve.points.push_back({thicknesses[i].nm(), slots[i].ratio});
        else
            curve.failures.emplace_back(thicknesses[i].nm(), slots[i].error);
    }
    return curve;
}

} // namespace gapdiamond::slab
