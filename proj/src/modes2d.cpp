#include "gapdiamond/modes2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "gapdiamond/slab.hpp"

namespace gapdiamond::modes2d {

namespace {

constexpr int kMaxIterations = 1000;
constexpr int kMaxReshifts = 4;

std::vector<double> sorted_edges(double lo, double hi, const std::vector<Rect>& rects, bool along_x) {
    std::vector<double> e{lo, hi};
    for (const auto& r : rects) {
        const double a = along_x ? r.x0 : r.y0;
        const double b = along_x ? r.x1 : r.y1;
        if (a > lo && a < hi) e.push_back(a);
        if (b > lo && b < hi) e.push_back(b);
    }
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return e;
}

struct Overlap {
    std::size_t interval;
    double length;
};

// Atomic intervals of `edges` overlapping [a, b].
std::vector<Overlap> overlaps(const std::vector<double>& edges, double a, double b) {
    std::vector<Overlap> out;
    const double tiny = 1e-9 * (b - a);
    auto it = std::upper_bound(edges.begin(), edges.end(), a);
    std::size_t k = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
    for (; k + 1 < edges.size() && edges[k] < b; ++k) {
        const double len = std::min(b, edges[k + 1]) - std::max(a, edges[k]);
        if (len > tiny) out.push_back({k, len});
    }
    return out;
}

// Per-cell permittivities. eps_te / eps_tm use anisotropic sub-cell
// averaging for the Ex / Ey principal component; eps_avg is the plain cell
// average used in energy integrals.
struct Raster {
    std::vector<double> eps_te, eps_tm, eps_avg, material;
};

Raster rasterize(const CrossSection& cs) {
    const auto xs = sorted_edges(cs.x0(), cs.x1(), cs.rects(), true);
    const auto ys = sorted_edges(cs.y0(), cs.y1(), cs.rects(), false);
    const std::size_t ax = xs.size() - 1, ay = ys.size() - 1;
    std::vector<double> atom(ax * ay);
    for (std::size_t b = 0; b < ay; ++b)
        for (std::size_t a = 0; a < ax; ++a) {
            const double n = cs.index_at(0.5 * (xs[a] + xs[a + 1]), 0.5 * (ys[b] + ys[b + 1]));
            atom[b * ax + a] = n * n;
        }

    const int nx = cs.nx(), ny = cs.ny();
    const double h = cs.pitch();
    Raster r;
    const auto N = static_cast<std::size_t>(nx) * ny;
    r.eps_te.resize(N);
    r.eps_tm.resize(N);
    r.eps_avg.resize(N);
    r.material.resize(N);

    std::vector<std::vector<Overlap>> xo(nx);
    for (int i = 0; i < nx; ++i) xo[i] = overlaps(xs, cs.x0() + i * h, cs.x0() + (i + 1) * h);

    for (int j = 0; j < ny; ++j) {
        const auto yo = overlaps(ys, cs.y0() + j * h, cs.y0() + (j + 1) * h);
        for (int i = 0; i < nx; ++i) {
            double avg = 0.0, te = 0.0, inv_tm = 0.0;
            for (const auto& oy : yo) {
                double inv_row = 0.0, row = 0.0;
                for (const auto& ox : xo[i]) {
                    const double e = atom[oy.interval * ax + ox.interval];
                    row += ox.length * e;
                    inv_row += ox.length / e;
                }
                avg += oy.length * row;
                te += oy.length * (h / inv_row);     // harmonic across x, arithmetic along y
                inv_tm += oy.length / (row / h);     // arithmetic along x, harmonic across y
            }
            const std::size_t k = static_cast<std::size_t>(j) * nx + i;
            r.eps_avg[k] = avg / (h * h);
            r.eps_te[k] = te / h;
            r.eps_tm[k] = h / inv_tm;
            r.material[k] = cs.index_at(cs.x0() + (i + 0.5) * h, cs.y0() + (j + 0.5) * h);
        }
    }
    return r;
}

using SpMat = Eigen::SparseMatrix<double>;

// Semivectorial operator. For TE (Ex) the x-coupling carries the
// normal-D continuity weights and y is a plain Laplacian; TM swaps the roles.
SpMat assemble(int nx, int ny, double h, double k0, Polarization pol, const std::vector<double>& eps) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(nx) * ny * 5);
    const double ih2 = 1.0 / (h * h);
    auto id = [nx](int i, int j) { return j * nx + i; };
    const bool te = pol == Polarization::TE;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int k = id(i, j);
            const double e = eps[k];
            double diag = k0 * k0 * e;
            auto couple = [&](bool exists, int nb, bool weighted) {
                if (!exists) {
                    diag -= ih2;  // Dirichlet ghost node
                    return;
                }
                if (weighted) {
                    const double en = eps[nb];
                    const double ebar = 0.5 * (e + en);
                    t.emplace_back(k, nb, en * ih2 / ebar);
                    diag -= e * ih2 / ebar;
                } else {
                    t.emplace_back(k, nb, ih2);
                    diag -= ih2;
                }
            };
            couple(i > 0, i > 0 ? id(i - 1, j) : 0, te);
            couple(i + 1 < nx, i + 1 < nx ? id(i + 1, j) : 0, te);
            couple(j > 0, j > 0 ? id(i, j - 1) : 0, !te);
            couple(j + 1 < ny, j + 1 < ny ? id(i, j + 1) : 0, !te);
            t.emplace_back(k, k, diag);
        }
    SpMat A(nx * ny, nx * ny);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
}

double slab_estimate(const CrossSection& cs, Length wavelength, Polarization pol) {
    double best = 0.0;
    for (const auto& [a, b] : cs.slices()) {
        try {
            const auto modes = slab::find_guided_modes(cs.column_stack(0.5 * (a + b)), wavelength, pol);
            if (!modes.empty()) best = std::max(best, modes.front().n_eff());
        } catch (const ValidationError&) {
        }
    }
    return best > 0.0 ? best : cs.max_index();
}

} // namespace

CrossSection::CrossSection(double x0, double x1, double y0, double y1, double pitch, double background,
                           std::vector<Rect> rects)
    : x0_(x0), x1_(x1), y0_(y0), y1_(y1), pitch_(pitch), background_(background), rects_(std::move(rects)) {
    if (!(pitch_ > 0.0)) throw ValidationError(fmt::format("grid pitch must be > 0, got {}", pitch_));
    if (!(x1_ > x0_) || !(y1_ > y0_)) throw ValidationError("cross-section domain is empty");
    if (!(background_ >= 1.0)) throw ValidationError("background index must be >= 1");
    const double fx = (x1_ - x0_) / pitch_, fy = (y1_ - y0_) / pitch_;
    nx_ = static_cast<int>(std::lround(fx));
    ny_ = static_cast<int>(std::lround(fy));
    if (std::abs(fx - nx_) > 1e-6 * fx || std::abs(fy - ny_) > 1e-6 * fy)
        throw ValidationError(fmt::format("domain {} x {} nm is not a whole number of {} nm cells", x1_ - x0_,
                                          y1_ - y0_, pitch_));
    const double tol = 1e-9 * std::max(x1_ - x0_, y1_ - y0_);
    for (const auto& r : rects_) {
        if (!(r.x1 > r.x0) || !(r.y1 > r.y0))
            throw ValidationError(fmt::format("rectangle '{}' is empty", r.name));
        if (r.x0 < x0_ - tol || r.x1 > x1_ + tol || r.y0 < y0_ - tol || r.y1 > y1_ + tol)
            throw ValidationError(fmt::format("rectangle '{}' extends outside the domain", r.name));
        if (!(r.n >= 1.0)) throw ValidationError(fmt::format("rectangle '{}' has index < 1", r.name));
    }
}

double CrossSection::index_at(double x, double y) const {
    for (auto it = rects_.rbegin(); it != rects_.rend(); ++it)
        if (it->contains(x, y)) return it->n;
    return background_;
}

double CrossSection::max_index() const {
    double m = background_;
    for (const auto& r : rects_) m = std::max(m, r.n);
    return m;
}

CrossSection CrossSection::with_pitch(double pitch) const {
    return CrossSection(x0_, x1_, y0_, y1_, pitch, background_, rects_);
}

std::vector<std::pair<double, double>> CrossSection::slices() const {
    const auto xs = sorted_edges(x0_, x1_, rects_, true);
    std::vector<std::pair<double, double>> out;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) out.emplace_back(xs[k], xs[k + 1]);
    return out;
}

LayerStack CrossSection::column_stack(double x) const {
    const auto ys = sorted_edges(y0_, y1_, rects_, false);
    std::vector<Layer> layers;
    const std::size_t m = ys.size() - 1;
    for (std::size_t k = m; k-- > 0;) {
        const double n = index_at(x, 0.5 * (ys[k] + ys[k + 1]));
        if (k == m - 1)
            layers.push_back(Layer::cladding("top", n));
        else if (k == 0)
            layers.push_back(Layer::cladding("bottom", n));
        else
            layers.push_back(Layer::film("film", n, Length::nanometers(ys[k + 1] - ys[k])));
    }
    if (m == 1) layers.push_back(Layer::cladding("bottom", layers.front().n));
    return LayerStack(std::move(layers));
}

CrossSection RidgeGeometry::build() const {
    const double h = pitch_nm;
    const double half = width_nm / 2.0;
    const double sub_half = (substrate_ridge_width_nm < 0.0 ? width_nm : substrate_ridge_width_nm) / 2.0;
    const double reach = std::max(half, sub_half) + padding_nm;
    const double xr = std::ceil(reach / h - 1e-9) * h;
    const double yb = -std::ceil((substrate_etch_nm + padding_nm) / h - 1e-9) * h;
    const double yt = std::ceil((gap_nm + membrane_nm + padding_nm) / h - 1e-9) * h;

    std::vector<Rect> rects;
    rects.push_back({-xr, xr, yb, -substrate_etch_nm, n_substrate, "substrate"});
    if (substrate_etch_nm > 0.0) rects.push_back({-sub_half, sub_half, -substrate_etch_nm, 0.0, n_substrate, "substrate ridge"});
    const bool rib = slab_nm > 0.0;
    const double gx0 = rib ? -xr : -half, gx1 = rib ? xr : half;
    if (gap_nm > 0.0) rects.push_back({gx0, gx1, 0.0, gap_nm, n_gap, "gap"});
    if (rib) rects.push_back({-xr, xr, gap_nm, gap_nm + slab_nm, n_membrane, "slab"});
    rects.push_back({-half, half, gap_nm, gap_nm + membrane_nm, n_membrane, "ridge"});
    return CrossSection(-xr, xr, yb, yt, h, n_cover, std::move(rects));
}

RidgeGeometry reference_rib_waveguide(double pitch_nm) {
    RidgeGeometry g;
    g.width_nm = 1000.0;
    g.membrane_nm = 120.0;
    g.slab_nm = 70.0;
    g.pitch_nm = pitch_nm;
    return g;
}

RidgeGeometry reference_ring_waveguide(double pitch_nm) {
    RidgeGeometry g;
    g.width_nm = 300.0;
    g.membrane_nm = 120.0;
    g.slab_nm = 0.0;
    g.substrate_etch_nm = 120.0;
    g.pitch_nm = pitch_nm;
    return g;
}

double cladding_bound(const CrossSection& cs, Length wavelength, Polarization pol) {
    const auto sl = cs.slices();
    double bound = 1.0;
    for (const auto& [a, b] : sl) {
        const double xc = 0.5 * (a + b);
        bound = std::max({bound, cs.index_at(xc, cs.y1() - 1e-9), cs.index_at(xc, cs.y0())});
    }
    for (double xc : {0.5 * (sl.front().first + sl.front().second), 0.5 * (sl.back().first + sl.back().second)}) {
        try {
            const LayerStack col = cs.column_stack(xc);
            const auto modes = slab::find_guided_modes(col, wavelength, pol);
            bound = std::max(bound, modes.empty() ? col.max_cladding_index() : modes.front().n_eff());
        } catch (const ValidationError&) {
            // uniform column: its index is already counted via the top/bottom edges
        }
    }
    return bound;
}

ModeSolution2D solve_fundamental_2d(const CrossSection& cs, Length wavelength, Polarization pol) {
    if (!(wavelength.nm() > 0.0)) throw ValidationError("wavelength must be > 0");
    const double k0 = 2.0 * std::numbers::pi / wavelength.nm();
    const Raster r = rasterize(cs);
    const auto& eps = pol == Polarization::TE ? r.eps_te : r.eps_tm;
    const SpMat A = assemble(cs.nx(), cs.ny(), cs.pitch(), k0, pol, eps);
    const auto N = A.rows();

    const double n_est = slab_estimate(cs, wavelength, pol) + 0.01;
    double sigma = k0 * k0 * n_est * n_est;

    SpMat I(N, N);
    I.setIdentity();
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    auto factor = [&] {
        lu.compute(A - sigma * I);
        if (lu.info() != Eigen::Success)
            throw SolverError(fmt::format("LU factorization failed at shift n = {}", std::sqrt(sigma) / k0));
    };
    factor();

    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(r.eps_avg.data(), N);
    x.normalize();
    double lambda = sigma, lambda_prev = 0.0, resid = 1.0;
    int reshifts = 0;
    int it = 0;
    for (; it < kMaxIterations; ++it) {
        Eigen::VectorXd y = lu.solve(x);
        y.normalize();
        const Eigen::VectorXd Ay = A * y;
        lambda = y.dot(Ay);
        resid = (Ay - lambda * y).norm() / std::abs(lambda);
        x = std::move(y);
        const double change = std::abs(lambda - lambda_prev) / std::abs(lambda);
        lambda_prev = lambda;
        if (change < 1e-12 && resid < 1e-8) break;
        // Once the estimate settles, move the shift next to it.
        if (change < 1e-5 && reshifts < kMaxReshifts && (sigma - lambda) > 1e-5 * std::abs(lambda)) {
            sigma = lambda * (1.0 + 1e-7);
            factor();
            ++reshifts;
        }
    }
    if (it == kMaxIterations)
        throw SolverError(fmt::format("inverse iteration did not converge after {} iterations (residual {:.3e})",
                                      kMaxIterations, resid));

    ModeSolution2D m;
    m.pol_ = pol;
    m.wavelength_nm_ = wavelength.nm();
    m.n_eff_ = std::sqrt(std::max(lambda, 0.0)) / k0;
    m.residual_ = resid;
    m.iterations_ = it + 1;
    m.nx_ = cs.nx();
    m.ny_ = cs.ny();
    m.pitch_ = cs.pitch();
    m.x0_ = cs.x0();
    m.y0_ = cs.y0();
    m.max_index_ = cs.max_index();
    m.eps_avg_ = r.eps_avg;
    m.material_ = r.material;

    Eigen::Index peak = 0;
    x.cwiseAbs().maxCoeff(&peak);
    const double scale = (x[peak] < 0.0 ? -1.0 : 1.0) / (x.norm() * cs.pitch());
    m.field_.resize(N);
    for (Eigen::Index k = 0; k < N; ++k) m.field_[k] = x[k] * scale;

    m.cladding_bound_ = cladding_bound(cs, wavelength, pol);
    m.guided_ = m.n_eff_ > m.cladding_bound_;
    return m;
}

ModeSolution2D make_mode_for_test(const CrossSection& cs, std::vector<double> field, Polarization pol,
                                  double wavelength_nm) {
    const Raster r = rasterize(cs);
    if (field.size() != r.eps_avg.size()) throw ValidationError("field size does not match the grid");
    ModeSolution2D m;
    m.pol_ = pol;
    m.wavelength_nm_ = wavelength_nm;
    m.guided_ = true;
    m.nx_ = cs.nx();
    m.ny_ = cs.ny();
    m.pitch_ = cs.pitch();
    m.x0_ = cs.x0();
    m.y0_ = cs.y0();
    m.max_index_ = cs.max_index();
    m.eps_avg_ = r.eps_avg;
    m.material_ = r.material;
    double s = 0.0;
    for (double v : field) s += v * v;
    if (s > 0.0) {
        const double scale = 1.0 / (std::sqrt(s) * cs.pitch());
        for (double& v : field) v *= scale;
    }
    m.field_ = std::move(field);
    return m;
}

double ModeSolution2D::intensity_at(double x, double y) const {
    const double xmax = x0_ + nx_ * pitch_, ymax = y0_ + ny_ * pitch_;
    if (!(x >= x0_ && x <= xmax && y >= y0_ && y <= ymax))
        throw ValidationError(fmt::format("point ({}, {}) nm lies outside the grid", x, y));
    const double fi = std::clamp((x - x0_) / pitch_ - 0.5, 0.0, static_cast<double>(nx_ - 1));
    const double fj = std::clamp((y - y0_) / pitch_ - 0.5, 0.0, static_cast<double>(ny_ - 1));
    const int i0 = std::min(static_cast<int>(fi), std::max(nx_ - 2, 0));
    const int j0 = std::min(static_cast<int>(fj), std::max(ny_ - 2, 0));
    const int i1 = std::min(i0 + 1, nx_ - 1), j1 = std::min(j0 + 1, ny_ - 1);
    const double tx = fi - i0, ty = fj - j0;
    return (1 - tx) * (1 - ty) * intensity(i0, j0) + tx * (1 - ty) * intensity(i1, j0) +
           (1 - tx) * ty * intensity(i0, j1) + tx * ty * intensity(i1, j1);
}

Peak ModeSolution2D::peak(PeakReference ref) const {
    Peak best;
    double best_key = -1.0;
    for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i) {
            const std::size_t k = idx(i, j);
            const double I = field_[k] * field_[k];
            double key = I, e = eps_avg_[k];
            switch (ref) {
            case PeakReference::GlobalField: break;
            case PeakReference::GlobalEnergy: key = e * I; break;
            case PeakReference::FieldPeakCavityIndex: e = max_index_ * max_index_; break;
            }
            if (key > best_key) {
                best_key = key;
                best = {i, j, I, e};
            }
        }
    return best;
}

ModeSolution2D ModeSolution2D::scaled(double factor) const {
    ModeSolution2D out = *this;
    for (double& v : out.field_) v *= factor;
    return out;
}

void ModeSolution2D::write_csv(std::ostream& os) const {
    os << "x_nm,y_nm,intensity\n";
    fmt::memory_buffer buf;
    for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i)
            fmt::format_to(std::back_inserter(buf), "{:.3f},{:.3f},{:.9e}\n", x_center(i), y_center(j), intensity(i, j));
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

double effective_area(const ModeSolution2D& mode, PeakReference ref) {
    double energy = 0.0;
    for (int j = 0; j < mode.ny(); ++j)
        for (int i = 0; i < mode.nx(); ++i) energy += mode.eps(i, j) * mode.intensity(i, j);
    energy *= mode.pitch() * mode.pitch();
    const Peak p = mode.peak(ref);
    if (!(p.intensity > 0.0)) throw ValidationError("mode field is identically zero");
    return energy / (p.eps * p.intensity);
}

RingVolume ring_mode_volume(const ModeSolution2D& mode, Length diameter, PeakReference ref) {
    if (!(diameter.nm() > 0.0)) throw ValidationError("ring diameter must be > 0");
    RingVolume v;
    v.nm3 = effective_area(mode, ref) * std::numbers::pi * diameter.nm();
    const double unit = mode.wavelength_nm() / mode.max_index();
    v.cubic_wavelengths = v.nm3 / (unit * unit * unit);
    return v;
}

double field_ratio_at_point(const ModeSolution2D& mode, double x_nm, double y_nm, PeakReference ref) {
    const double at = mode.intensity_at(x_nm, y_nm);
    const Peak p = mode.peak(ref);
    if (!(p.intensity > 0.0)) throw ValidationError("mode field is identically zero");
    return at / p.intensity;
}

double lateral_peak_x(const ModeSolution2D& mode, double y_nm) {
    double best_x = mode.x_center(0), best = -1.0;
    for (int i = 0; i < mode.nx(); ++i) {
        const double v = mode.intensity_at(mode.x_center(i), y_nm);
        if (v > best) {
            best = v;
            best_x = mode.x_center(i);
        }
    }
    return best_x;
}

double effective_index_method(const CrossSection& cs, Length wavelength, Polarization pol) {
    const auto sl = cs.slices();
    std::vector<double> n_slice;
    n_slice.reserve(sl.size());
    for (const auto& [a, b] : sl) {
        const double xc = 0.5 * (a + b);
        try {
            n_slice.push_back(slab::fundamental_mode(cs.column_stack(xc), wavelength, pol).n_eff());
        } catch (const ValidationError&) {
            throw UnguidedError(fmt::format("slice at x = {} nm is uniform and guides nothing", xc));
        } catch (const UnguidedError&) {
            throw UnguidedError(fmt::format("slice at x = {} nm has no guided slab mode", xc));
        }
    }
    if (std::all_of(n_slice.begin(), n_slice.end(), [&](double v) { return v == n_slice.front(); }))
        return n_slice.front();

    // Ex is normal to the sidewalls, so the lateral problem sees TM-type
    // boundary conditions for quasi-TE and vice versa.
    const Polarization lateral = pol == Polarization::TE ? Polarization::TM : Polarization::TE;
    std::vector<Layer> layers;
    layers.push_back(Layer::cladding("left", n_slice.front()));
    for (std::size_t k = 1; k + 1 < sl.size(); ++k)
        layers.push_back(Layer::film("slice", n_slice[k], Length::nanometers(sl[k].second - sl[k].first)));
    layers.push_back(Layer::cladding("right", n_slice.back()));
    try {
        return slab::fundamental_mode(LayerStack(std::move(layers)), wavelength, lateral).n_eff();
    } catch (const ValidationError& e) {
        throw UnguidedError(fmt::format("lateral effective-index problem is degenerate: {}", e.what()));
    }
}

} // namespace gapdiamond::modes2d
