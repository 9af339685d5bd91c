#include "gapdiamond/fitting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>

#include <fmt/format.h>

#include "gapdiamond/parallel.hpp"

namespace gapdiamond::fitting {

void DecayTrace::validate() const {
    const std::size_t n = positions_nm.size();
    if (n < 3) throw ValidationError(fmt::format("decay trace needs at least 3 points, got {}", n));
    if (intensities.size() != n) throw ValidationError("decay trace positions and intensities differ in length");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(positions_nm[i])) throw ValidationError(fmt::format("point {}: position is not finite", i));
        if (i > 0 && !(positions_nm[i] > positions_nm[i - 1]))
            throw ValidationError(fmt::format("point {}: positions must be strictly increasing", i));
        if (!(intensities[i] > 0.0) || !std::isfinite(intensities[i]))
            throw ValidationError(fmt::format("point {}: intensity {} is not positive", i, intensities[i]));
    }
    if (sigma) {
        if (sigma->size() != n) throw ValidationError("decay trace sigma has the wrong length");
        for (std::size_t i = 0; i < n; ++i)
            if (!((*sigma)[i] > 0.0)) throw ValidationError(fmt::format("point {}: sigma must be positive", i));
    }
}

const Parameter& FitResult::param(std::string_view name) const {
    for (const auto& p : params)
        if (p.name == name) return p;
    throw ValidationError(fmt::format("fit has no parameter '{}'", name));
}

DecayFit fit_exponential_decay(const DecayTrace& trace) {
    trace.validate();
    const std::size_t n = trace.positions_nm.size();
    std::vector<double> x(n), y(n), w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = trace.positions_nm[i] * 1e-9;
        y[i] = std::log(trace.intensities[i]);
        if (trace.sigma) {
            const double rel = (*trace.sigma)[i] / trace.intensities[i];
            w[i] = 1.0 / (rel * rel);
        }
    }
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double xm = sx / sw, ym = sy / sw;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - xm, dy = y[i] - ym;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    const double slope = sxy / sxx;
    const double intercept = ym - slope * xm;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - intercept - slope * x[i];
        sse += w[i] * r * r;
    }

    DecayFit out;
    out.fit.dof = static_cast<int>(n) - 2;
    out.fit.sse = sse;
    out.fit.tss = syy;
    // Known sigmas give absolute errors; otherwise scale by the residual variance.
    const double s2 = trace.sigma ? 1.0 : sse / out.fit.dof;
    const double se_slope = std::sqrt(s2 / sxx);
    const double se_intercept = std::sqrt(s2 * (1.0 / sw + xm * xm / sxx));
    if (trace.sigma) out.fit.chi2 = sse;

    out.alpha_per_m = -slope;
    out.alpha_se_per_m = se_slope;
    out.i0 = std::exp(intercept);
    out.gain = out.alpha_per_m < 0.0;
    if (out.gain) out.fit.warnings.emplace_back("gain: check data orientation");
    out.fit.params = {{"alpha_per_m", out.alpha_per_m, se_slope}, {"i0", out.i0, out.i0 * se_intercept}};
    return out;
}

GoodnessOfFit goodness_of_fit(const FitResult& result) {
    GoodnessOfFit g;
    if (result.chi2) {
        g.reduced_chi2 = *result.chi2 / std::max(result.dof, 1);
    } else if (result.tss > 0.0) {
        g.r_squared = 1.0 - result.sse / result.tss;
    } else {
        g.r_squared = result.sse == 0.0 ? 1.0 : 0.0;
    }
    return g;
}

double gap_objective(std::span<const RatioDatum> data, const slab::MembraneStack& tmpl, double gap_nm,
                     const GapSearch& search, unsigned jobs) {
    struct Slot {
        double residual = 0.0;
        bool unguided = false;
        std::string error;
    };
    std::vector<Slot> slots(data.size());
    parallel_for(data.size(), jobs, [&](std::size_t i) {
        const RatioDatum& d = data[i];
        try {
            const LayerStack st = tmpl.build(Length::nanometers(d.thickness_nm), Length::nanometers(gap_nm));
            slots[i].residual =
                slab::penetration_ratio(st, search.wavelength, d.polarization, search.window) - d.ratio;
        } catch (const UnguidedError&) {
            slots[i].unguided = true;
        } catch (const std::exception& e) {
            slots[i].error = e.what();
        }
    });
    double sse = 0.0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i].error.empty())
            throw SolverError(fmt::format("model evaluation failed at thickness {} nm ({}): {}", data[i].thickness_nm,
                                          to_string(data[i].polarization), slots[i].error));
        if (slots[i].unguided) return std::numeric_limits<double>::infinity();
        sse += slots[i].residual * slots[i].residual;
    }
    return sse;
}

GapFit fit_air_gap(std::span<const RatioDatum> data, const slab::MembraneStack& tmpl, const GapSearch& search,
                   unsigned jobs) {
    if (data.size() < 2) throw ValidationError("gap fit needs at least 2 data points");
    if (!(search.upper_nm > search.lower_nm) || !(search.lower_nm >= 0.0))
        throw ValidationError("gap search bracket must satisfy 0 <= lower < upper");
    if (!(search.tolerance_nm > 0.0)) throw ValidationError("gap search tolerance must be > 0");

    auto f = [&](double g) { return gap_objective(data, tmpl, g, search, jobs); };
    constexpr double kInvPhi = 0.6180339887498949;

    GapFit out;
    double a = search.lower_nm, b = search.upper_nm;
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    std::vector<double> seen{fc, fd};
    while (b - a > search.tolerance_nm) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
            seen.push_back(fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
            seen.push_back(fd);
        }
        out.bracket_history.push_back(b - a);
    }

    double best = 0.5 * (a + b), fbest = f(best);
    const double flo = f(search.lower_nm), fhi = f(search.upper_nm);
    seen.push_back(fbest);
    seen.push_back(flo);
    seen.push_back(fhi);
    if (flo <= fbest) {
        best = search.lower_nm;
        fbest = flo;
    }
    if (fhi < fbest) {
        best = search.upper_nm;
        fbest = fhi;
    }
    if (!std::isfinite(fbest)) throw SolverError("gap fit: no trial gap supports guided modes for all data");

    double lo_seen = std::numeric_limits<double>::infinity(), hi_seen = 0.0;
    for (double v : seen)
        if (std::isfinite(v)) {
            lo_seen = std::min(lo_seen, v);
            hi_seen = std::max(hi_seen, v);
        }
    if (hi_seen - lo_seen <= 1e-14 * std::max(1.0, hi_seen))
        throw SolverError("gap fit is unidentifiable: the objective does not depend on the gap");

    // Curvature of the SSE at the optimum; one-sided at a bound.
    constexpr double h = 0.1;
    double curvature;
    if (best - h < search.lower_nm)
        curvature = (f(best + 2 * h) - 2 * f(best + h) + fbest) / (h * h);
    else if (best + h > search.upper_nm)
        curvature = (f(best - 2 * h) - 2 * f(best - h) + fbest) / (h * h);
    else
        curvature = (f(best + h) - 2 * fbest + f(best - h)) / (h * h);

    out.gap_nm = best;
    out.fit.sse = fbest;
    out.fit.dof = static_cast<int>(data.size()) - 1;
    double mean = 0.0;
    for (const auto& dpt : data) mean += dpt.ratio;
    mean /= static_cast<double>(data.size());
    for (const auto& dpt : data) out.fit.tss += (dpt.ratio - mean) * (dpt.ratio - mean);
    const double s2 = fbest / out.fit.dof;
    out.gap_se_nm = curvature > 0.0 && std::isfinite(curvature) ? std::sqrt(2.0 * s2 / curvature) : 0.0;
    if (!(curvature > 0.0)) out.fit.warnings.emplace_back("objective curvature is not positive at the optimum");
    if (best == search.lower_nm || best == search.upper_nm)
        out.fit.warnings.emplace_back("optimum lies on the search bound");
    out.fit.params = {{"gap_nm", out.gap_nm, out.gap_se_nm}};
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::optional<double> to_number(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// Calls row(line_number, fields) for each data line.
template <class Row>
void for_each_row(std::istream& in, Row row) {
    std::string line;
    int lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split(t);
        if (first && !to_number(fields.front())) {
            first = false;
            continue;  // header
        }
        first = false;
        row(lineno, fields);
    }
}

double field_number(int lineno, std::string_view field, const char* what) {
    const auto v = to_number(field);
    if (!v) throw ValidationError(fmt::format("line {}: {} '{}' is not a number", lineno, what, field));
    return *v;
}

} // namespace

DecayTrace read_decay_csv(std::istream& in) {
    DecayTrace trace;
    std::vector<double> sigma;
    std::optional<std::size_t> columns;
    for_each_row(in, [&](int lineno, const std::vector<std::string_view>& f) {
        if (f.size() != 2 && f.size() != 3)
            throw ValidationError(fmt::format("line {}: expected 2 or 3 columns, got {}", lineno, f.size()));
        if (columns && *columns != f.size())
            throw ValidationError(fmt::format("line {}: column count changed from {} to {}", lineno, *columns, f.size()));
        columns = f.size();
        const double x = field_number(lineno, f[0], "position");
        const double y = field_number(lineno, f[1], "intensity");
        if (!(y > 0.0)) throw ValidationError(fmt::format("line {}: intensity {} must be positive", lineno, y));
        if (!trace.positions_nm.empty() && !(x > trace.positions_nm.back()))
            throw ValidationError(fmt::format("line {}: positions must be strictly increasing", lineno));
        trace.positions_nm.push_back(x);
        trace.intensities.push_back(y);
        if (f.size() == 3) {
            const double s = field_number(lineno, f[2], "sigma");
            if (!(s > 0.0)) throw ValidationError(fmt::format("line {}: sigma {} must be positive", lineno, s));
            sigma.push_back(s);
        }
    });
    if (columns == 3u) trace.sigma = std::move(sigma);
    trace.validate();
    return trace;
}

std::vector<RatioDatum> read_ratio_csv(std::istream& in) {
    std::vector<RatioDatum> data;
    for_each_row(in, [&](int lineno, const std::vector<std::string_view>& f) {
        if (f.size() != 3) throw ValidationError(fmt::format("line {}: expected 3 columns, got {}", lineno, f.size()));
        RatioDatum d;
        d.thickness_nm = field_number(lineno, f[0], "thickness");
        d.ratio = field_number(lineno, f[1], "ratio");
        if (!(d.thickness_nm > 0.0))
            throw ValidationError(fmt::format("line {}: thickness {} must be positive", lineno, d.thickness_nm));
        if (!(d.ratio >= 0.0 && d.ratio <= 1.0))
            throw ValidationError(fmt::format("line {}: ratio {} outside [0, 1]", lineno, d.ratio));
        try {
            d.polarization = parse_polarization(std::string(f[2]));
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("line {}: {}", lineno, e.what()));
        }
        data.push_back(d);
    });
    if (data.empty()) throw ValidationError("ratio CSV contains no data rows");
    return data;
}

} // namespace gapdiamond::fitting
