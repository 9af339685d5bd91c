#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gapdiamond/cavity.hpp"
#include "gapdiamond/fitting.hpp"
#include "gapdiamond/modes2d.hpp"
#include "gapdiamond/slab.hpp"
#include "scenario.hpp"
#include "svg.hpp"

namespace gapdiamond::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string command;
    fs::path scenario;
    fs::path out;
    fs::path data;
    std::string fit_kind;
    bool svg = false;
    bool check_paper_point = false;
    unsigned jobs = 0;
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError(fmt::format("cannot open '{}' for writing", path.string()));
    f << content;
    if (!f) throw ValidationError(fmt::format("failed writing '{}'", path.string()));
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError(fmt::format("cannot open '{}'", path.string()));
    return f;
}

unsigned resolve_jobs(unsigned flag) {
    if (flag > 0) return flag;
    const char* env = std::getenv(kJobsEnv);
    if (!env || !*env) return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 1024)
        throw ValidationError(fmt::format("{}='{}' is not a positive integer", kJobsEnv, env));
    return static_cast<unsigned>(v);
}

void warn_pitch(double pitch, std::ostream& err) {
    if (pitch > kPitchWarnNm)
        err << fmt::format("warning: grid pitch {} nm is coarser than {} nm; results will be inaccurate\n", pitch,
                           kPitchWarnNm);
}

template <class T>
const T& need(const std::optional<T>& block, const char* name) {
    if (!block) throw ValidationError(fmt::format("scenario /: missing required block '{}'", name));
    return *block;
}

int cmd_ratio_curve(const Options& o, const Scenario& s, unsigned jobs, std::ostream& out, std::ostream& err) {
    const RatioCurveSpec& spec = need(s.ratio_curve, "ratio_curve");
    std::vector<Length> ts;
    for (double t : spec.thicknesses_nm) ts.push_back(Length::nanometers(t));

    std::string csv = "polarization,gap_nm,thickness_nm,ratio\n";
    std::vector<Series> series;
    std::size_t failures = 0;
    for (Polarization pol : spec.polarizations)
        for (double gap : spec.gaps_nm) {
            const auto curve = slab::ratio_curve(ts, Length::nanometers(gap), s.wavelength, pol, s.stack,
                                                 Length::nanometers(spec.window_nm), jobs);
            Series line{fmt::format("{}, gap {:g} nm", to_string(pol), gap), {}, {}};
            for (const auto& p : curve.points) {
                csv += fmt::format("{},{:.3f},{:.3f},{:.10f}\n", to_string(pol), gap, p.thickness_nm, p.ratio);
                line.x.push_back(p.thickness_nm);
                line.y.push_back(p.ratio);
            }
            for (const auto& [t, why] : curve.failures) {
                err << fmt::format("error: {} gap {:g} nm thickness {:g} nm: {}\n", to_string(pol), gap, t, why);
                ++failures;
            }
            series.push_back(std::move(line));
        }
    write_file(o.out, csv);
    if (o.svg) {
        std::ostringstream svg;
        write_svg_plot(svg, "Field fraction in the top substrate layer", "membrane thickness (nm)",
                       fmt::format("ratio in top {:g} nm", spec.window_nm), series);
        write_file(fs::path(o.out).replace_extension(".svg"), svg.str());
    }
    out << fmt::format("wrote {} curves to {}\n", series.size(), o.out.string());
    return failures ? kSolverError : kOk;
}

int cmd_fit(const Options& o, const Scenario& s, unsigned jobs, std::ostream& out, std::ostream& err) {
    const FitSpec spec = s.fit.value_or(FitSpec{});
    FitKind kind;
    if (!o.fit_kind.empty())
        kind = o.fit_kind == "gap" ? FitKind::Gap : FitKind::Loss;
    else if (spec.kind)
        kind = *spec.kind;
    else
        throw ValidationError("fit kind not given (command line 'gap'/'loss' or scenario /fit/kind)");
    fs::path data = o.data;
    if (data.empty()) {
        if (!spec.data) throw ValidationError("no data file (--data or scenario /fit/data)");
        data = *spec.data;
    }
    std::ifstream in = open_input(data);

    std::string csv = "kind,parameter,estimate,stderr,sse,dof\n";
    if (kind == FitKind::Loss) {
        fitting::DecayTrace trace;
        try {
            trace = fitting::read_decay_csv(in);
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("{}: {}", data.string(), e.what()));
        }
        const auto fit = fitting::fit_exponential_decay(trace);
        const auto gof = fitting::goodness_of_fit(fit.fit);
        out << fmt::format("loss fit ({} points): alpha = {:.2f} +/- {:.2f} dB/cm\n", trace.positions_nm.size(),
                           fit.alpha_db_per_cm(), fit.alpha_se_db_per_cm());
        if (gof.reduced_chi2) out << fmt::format("reduced chi^2 = {:.4f}\n", *gof.reduced_chi2);
        if (gof.r_squared) out << fmt::format("R^2 = {:.6f}\n", *gof.r_squared);
        if (!fit.gain) {
            const auto q = cavity::q_from_loss(Attenuation::per_meter(fit.alpha_per_m), s.wavelength,
                                               s.stack.n_membrane);
            if (q) out << fmt::format("loss-limited Q (n = {:g}, {:g} nm) = {:.0f}\n", s.stack.n_membrane,
                                      s.wavelength.nm(), *q);
        }
        for (const auto& w : fit.fit.warnings) err << "warning: " << w << "\n";
        csv += fmt::format("loss,alpha_db_per_cm,{:.6f},{:.6f},{:.9e},{}\n", fit.alpha_db_per_cm(),
                           fit.alpha_se_db_per_cm(), fit.fit.sse, fit.fit.dof);
    } else {
        std::vector<fitting::RatioDatum> ratios;
        try {
            ratios = fitting::read_ratio_csv(in);
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("{}: {}", data.string(), e.what()));
        }
        const auto fit = fitting::fit_air_gap(ratios, s.stack, spec.search, jobs);
        const auto gof = fitting::goodness_of_fit(fit.fit);
        out << fmt::format("gap fit ({} points): gap = {:.2f} +/- {:.2f} nm, SSE = {:.3e}\n", ratios.size(),
                           fit.gap_nm, fit.gap_se_nm, fit.fit.sse);
        if (gof.r_squared) out << fmt::format("R^2 = {:.6f}\n", *gof.r_squared);
        for (const auto& w : fit.fit.warnings) err << "warning: " << w << "\n";
        csv += fmt::format("gap,gap_nm,{:.6f},{:.6f},{:.9e},{}\n", fit.gap_nm, fit.gap_se_nm, fit.fit.sse,
                           fit.fit.dof);
    }
    write_file(o.out, csv);
    return kOk;
}

int cmd_design(const Options& o, const Scenario& s, unsigned jobs, std::ostream& out, std::ostream& err) {
    const DesignSpec& spec = need(s.design, "design");
    warn_pitch(spec.sweep.waveguide.pitch_nm, err);
    const auto table = cavity::design_ring(spec.sweep, jobs);
    std::ostringstream csv;
    cavity::write_design_csv(csv, table);
    write_file(o.out, csv.str());
    for (const auto& f : table.failures)
        err << fmt::format("skipped {} D {:g} depth {:g} membrane {:g} gap {:g}: {}\n", to_string(f.polarization),
                           f.diameter_nm, f.depth_nm, f.membrane_nm, f.gap_nm, f.reason);
    const auto& best = table.rows.front();
    out << fmt::format("{} rows; best F_SE = {:.3f} ({}, D {:g} nm, depth {:g} nm, membrane {:g} nm, gap {:g} nm)\n",
                       table.rows.size(), best.f_se, to_string(best.polarization), best.diameter_nm, best.depth_nm,
                       best.membrane_nm, best.gap_nm);
    if (!o.check_paper_point) return kOk;

    const DesignPoint& p = spec.reference_point;
    auto near = [](double a, double b) { return std::abs(a - b) < 1e-6; };
    const cavity::DesignRow* top = nullptr;
    for (const auto& r : table.rows) {
        if (!(near(r.diameter_nm, p.diameter_nm) && near(r.depth_nm, p.depth_nm) &&
              near(r.membrane_nm, p.membrane_nm) && near(r.gap_nm, p.gap_nm)))
            continue;
        out << fmt::format("reference point {}: F_SE = {:.3f}, F_ZPL = {:.1f}, V = {:.2f} (lambda/n)^3, "
                           "|E_NV/E_max|^2 = {:.3f}, Q = {:.0f}\n",
                           to_string(r.polarization), r.f_se, r.f_zpl, r.v_cubic, r.field_ratio_sq, r.q);
        if (!top || r.f_se > top->f_se) top = &r;
    }
    if (!top) throw ValidationError("reference point is not part of the design sweep");
    const bool pass = top->f_se > 1.0;
    out << fmt::format("reference point check: {} (best F_SE = {:.3f}, {})\n", pass ? "PASS" : "FAIL", top->f_se,
                       to_string(top->polarization));
    return pass ? kOk : kSolverError;
}

int cmd_mode2d(const Options& o, const Scenario& s, std::ostream& out, std::ostream& err) {
    const Mode2DSpec& spec = need(s.mode2d, "mode2d");
    warn_pitch(spec.waveguide.pitch_nm, err);
    const auto cs = spec.waveguide.build();
    std::string csv = "polarization,x_nm,y_nm,intensity\n";
    for (Polarization pol : spec.polarizations) {
        const auto mode = modes2d::solve_fundamental_2d(cs, s.wavelength, pol);
        if (!mode.guided()) {
            err << fmt::format("unguided: {} n_eff {:.6f} does not exceed the cladding bound {:.6f}\n",
                               to_string(pol), mode.n_eff(), mode.cladding_bound());
            return kUnguided;
        }
        out << fmt::format("{} n_eff = {:.6f} (cladding bound {:.6f})\n", to_string(pol), mode.n_eff(),
                           mode.cladding_bound());
        for (int j = 0; j < mode.ny(); ++j)
            for (int i = 0; i < mode.nx(); ++i)
                csv += fmt::format("{},{:.3f},{:.3f},{:.9e}\n", to_string(pol), mode.x_center(i), mode.y_center(j),
                                   mode.intensity(i, j));
    }
    write_file(o.out, csv);
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Mode, coupling and cavity design tools for GaP-on-diamond photonics", "gapdiamond"};
    app.require_subcommand(1);
    auto common = [&](CLI::App* sub) {
        sub->add_option("--scenario", o.scenario, "scenario JSON file")->required();
        sub->add_option("--out", o.out, "output CSV path")->required();
        sub->add_option("--jobs", o.jobs, fmt::format("worker threads (default ${} or 1)", kJobsEnv))
            ->check(CLI::Range(1u, 1024u));
    };
    auto* rc = app.add_subcommand("ratio-curve", "field fraction near the substrate surface vs membrane thickness");
    common(rc);
    rc->add_flag("--svg", o.svg, "also write an SVG plot next to the CSV");
    auto* fit = app.add_subcommand("fit", "fit a gap thickness or a propagation loss");
    fit->add_option("kind", o.fit_kind, "gap or loss")->check(CLI::IsMember({"gap", "loss"}));
    common(fit);
    fit->add_option("--data", o.data, "data CSV (overrides the scenario)");
    auto* design = app.add_subcommand("design", "ring-cavity enhancement sweep");
    common(design);
    design->add_flag("--check-paper-point", o.check_paper_point, "require F_SE > 1 at the reference point");
    auto* m2d = app.add_subcommand("mode2d", "fundamental cross-section modes");
    common(m2d);

    std::vector<std::string> argv_store{"gapdiamond"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        const unsigned jobs = resolve_jobs(o.jobs);
        const Scenario s = load_scenario(o.scenario);
        if (rc->parsed()) return cmd_ratio_curve(o, s, jobs, out, err);
        if (fit->parsed()) return cmd_fit(o, s, jobs, out, err);
        if (design->parsed()) return cmd_design(o, s, jobs, out, err);
        return cmd_mode2d(o, s, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const UnguidedError& e) {
        err << "unguided: " << e.what() << "\n";
        return kUnguided;
    } catch (const std::exception& e) {
        err << "solver error: " << e.what() << "\n";
        return kSolverError;
    }
}

} // namespace gapdiamond::cli
