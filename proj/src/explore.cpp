#include "chiralpb/explore.hpp"

#include "chiralpb/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace chiralpb {

double Axis::at(int i) const
{
    if (count == 1) return min;
    if (i == count - 1) return max;
    return min + (max - min) * double(i) / double(count - 1);
}

void validate_grid(const SweepGrid& g)
{
    for (const Axis* a : {&g.detuning, &g.alpha}) {
        if (a->count < 1) throw InvalidSpec("grid axis count must be >= 1");
        if (a->count >= 2 && !(a->max > a->min)) throw InvalidSpec("grid axis must be strictly increasing");
        if (!std::isfinite(a->min) || !std::isfinite(a->max)) throw InvalidSpec("non-finite grid axis");
    }
    if (g.alpha.min < 0.0) throw InvalidSpec("alpha axis must be >= 0");
    if (g.n_cells < 1) throw InvalidSpec("N must be >= 1");
    if (!(g.g >= 0.0)) throw InvalidSpec("g must be >= 0");
}

SystemSpec spec_at(const SweepGrid& g, double alpha)
{
    SystemSpec s;
    s.n_cells = g.n_cells;
    s.cavity_freq = 0.0;
    s.atom_freq = g.kind == Kind::SideCoupledBareAtom ? 0.0 : g.atom_offset;
    s.coupling_g = g.g;
    s.kappa_r = 1.0 / (1.0 + alpha);
    s.kappa_l = alpha / (1.0 + alpha);
    s.hop_phase = g.hop_phase;
    s.atom_loss = g.atom_loss;
    s.cavity_loss = g.cavity_loss;
    s.kind = g.kind;
    return validate_spec(s);
}

namespace {

Row eval_row(const SweepGrid& grid, unsigned q, std::size_t idx, const std::vector<double>& cd,
             const std::vector<double>& ad)
{
    const int ia = static_cast<int>(idx % std::size_t(grid.alpha.count));
    const int id = static_cast<int>(idx / std::size_t(grid.alpha.count));
    Row r;
    r.delta_over_kappa = grid.detuning.at(id);
    r.alpha = grid.alpha.at(ia);
    try {
        SystemSpec s = spec_at(grid, r.alpha);
        if (!cd.empty()) s.cavity_detune_disorder = cd;
        if (!ad.empty()) s.atom_detune_disorder = ad;
        s = validate_spec(s);
        const DriveFrame f = frame_at_detuning(s, r.delta_over_kappa);
        const int max_n = (q & (QG3 | QLabel)) ? 3 : (q & (QG2 | QArg)) ? 2 : 1;
        const AmplitudeSet a = amplitudes(s, f, max_n);
        if (q & (QT | QR)) {
            const TransRefl tr = transmission_reflection(s, a);
            if (q & QT) r.T = tr.T;
            if (q & QR) r.R = tr.R;
        }
        if (max_n >= 2) {
            const ScatterResult sr = result_from(s, a);
            if (q & QG2) r.g2 = sr.g2;
            if (q & QG3) r.g3 = sr.g3;
            if (q & QArg) r.arg_p2 = sr.arg_p2;
            if (q & QLabel) r.label = to_string(sr.label);
        }
    } catch (const std::exception& e) {
        r.err = e.what();
    }
    return r;
}

}  // namespace

Table sweep(const SweepGrid& grid, unsigned quantities, const std::vector<double>& cd,
            const std::vector<double>& ad)
{
    validate_grid(grid);
    const std::size_t n = grid.size();
    Table t(n);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < n; ++i) t[i] = eval_row(grid, quantities, i, cd, ad);
    return t;
}

Table sweep_serial(const SweepGrid& grid, unsigned quantities, const std::vector<double>& cd,
                   const std::vector<double>& ad)
{
    validate_grid(grid);
    const std::size_t n = grid.size();
    Table t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = eval_row(grid, quantities, i, cd, ad);
    return t;
}

// ---------------------------------------------------------------- zeros

cplx total_p2_at(const SweepGrid& g, double delta, double alpha)
{
    const SystemSpec s = spec_at(g, alpha);
    return amplitudes(s, frame_at_detuning(s, delta), 2).total_2;
}

namespace {

double wrap(double x)
{
    return std::remainder(x, 2.0 * kPi);
}

struct PointEval {
    cplx p1, p2;
    bool ok = false;
};

PointEval eval_p12(const SweepGrid& g, double delta, double alpha)
{
    PointEval e;
    try {
        const SystemSpec s = spec_at(g, alpha);
        const AmplitudeSet a = amplitudes(s, frame_at_detuning(s, delta), 2);
        e.p1 = a.total_1;
        e.p2 = a.total_2;
        e.ok = std::isfinite(std::abs(e.p2));
    } catch (const std::exception&) {
        e.ok = false;
    }
    return e;
}

double zero_tol(const PointEval& e)
{
    return 1e-10 * std::max(1.0, std::norm(e.p1));
}

struct NewtonOut {
    ZeroPoint z;
    bool converged = false;
};

NewtonOut newton(const SweepGrid& g, double d0, double a0)
{
    constexpr int kMaxIter = 50;
    constexpr double kMaxStep = 0.01;
    constexpr double h = 1e-7;

    NewtonOut out;
    double d = d0, a = a0;
    PointEval cur = eval_p12(g, d, a);
    Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
    int it = 0;
    for (; it < kMaxIter && cur.ok; ++it) {
        if (std::abs(cur.p2) < 1e-15 * std::max(1.0, std::norm(cur.p1))) break;
        const cplx fdp = eval_p12(g, d + h, a).p2, fdm = eval_p12(g, d - h, a).p2;
        const double ah = std::min(h, std::max(a, 1e-300));  // stay at alpha >= 0
        const cplx fap = eval_p12(g, d, a + h).p2, fam = eval_p12(g, d, a - ah).p2;
        const cplx dd = (fdp - fdm) / (2.0 * h);
        const cplx da = (fap - fam) / (h + ah);
        J << dd.real(), da.real(), dd.imag(), da.imag();
        if (!J.allFinite() || std::abs(J.determinant()) < 1e-300) break;
        Eigen::Vector2d step = -J.partialPivLu().solve(Eigen::Vector2d(cur.p2.real(), cur.p2.imag()));
        const double sn = step.norm();
        if (sn > kMaxStep) step *= kMaxStep / sn;

        // backtracking on |p2|
        bool moved = false;
        for (int bt = 0; bt < 12; ++bt) {
            const double nd = d + step(0);
            const double na = std::clamp(a + step(1), 0.0, 1.0);
            const PointEval nxt = eval_p12(g, nd, na);
            if (nxt.ok && std::abs(nxt.p2) < std::abs(cur.p2)) {
                d = nd;
                a = na;
                cur = nxt;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    out.z.delta = d;
    out.z.alpha = a;
    out.z.iterations = it;
    out.z.residual = cur.ok ? std::abs(cur.p2) : std::numeric_limits<double>::infinity();
    out.z.winding = J.determinant() > 0 ? 1 : (J.determinant() < 0 ? -1 : 0);
    if (cur.ok && std::abs(cur.p1) > 0.0)
        out.z.g2 = std::norm(cur.p2) / (std::norm(cur.p1) * std::norm(cur.p1));
    else
        out.z.g2 = std::numeric_limits<double>::infinity();

    const double eps = 1e-9;
    const bool inside = d >= g.detuning.min - eps && d <= g.detuning.max + eps &&
                        a >= g.alpha.min - eps && a <= g.alpha.max + eps;
    out.converged = cur.ok && out.z.residual < zero_tol(cur) && out.z.g2 <= 1e-10 && inside &&
                    out.z.winding != 0;
    return out;
}

}  // namespace

ZeroSearch find_zeros(const SweepGrid& region)
{
    validate_grid(region);
    if (region.detuning.count < 2 || region.alpha.count < 2)
        throw InvalidSpec("zero search needs at least 2 points per axis");
    const int nd = region.detuning.count, na = region.alpha.count;
    std::vector<PointEval> v(std::size_t(nd) * na);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = eval_p12(region, region.detuning.at(int(i / na)), region.alpha.at(int(i % na)));

    auto at = [&](int i, int j) -> const PointEval& { return v[std::size_t(i) * na + j]; };
    struct Flag {
        int i, j, w;
    };
    std::vector<Flag> flags;
    for (int i = 0; i + 1 < nd; ++i) {
        for (int j = 0; j + 1 < na; ++j) {
            const PointEval* c[4] = {&at(i, j), &at(i + 1, j), &at(i + 1, j + 1), &at(i, j + 1)};
            bool ok = true;
            for (auto* p : c) ok = ok && p->ok && p->p2 != cplx(0.0);
            if (!ok) continue;
            double circ = 0.0;
            for (int k = 0; k < 4; ++k) circ += wrap(std::arg(c[(k + 1) % 4]->p2) - std::arg(c[k]->p2));
            const int w = static_cast<int>(std::lround(circ / (2.0 * kPi)));
            if (w != 0) flags.push_back({i, j, w});
        }
    }

    ZeroSearch res;
    res.flagged = static_cast<int>(flags.size());
    std::vector<NewtonOut> outs(flags.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t f = 0; f < flags.size(); ++f) {
        const double d0 = 0.5 * (region.detuning.at(flags[f].i) + region.detuning.at(flags[f].i + 1));
        const double a0 = 0.5 * (region.alpha.at(flags[f].j) + region.alpha.at(flags[f].j + 1));
        outs[f] = newton(region, d0, a0);
    }
    for (std::size_t f = 0; f < flags.size(); ++f) {
        res.net_flagged_winding += flags[f].w;
        if (!outs[f].converged) {
            res.unconverged.push_back(outs[f].z);
            continue;
        }
        const ZeroPoint& z = outs[f].z;
        bool dup = false;
        for (auto& e : res.zeros) {
            if (std::hypot(e.delta - z.delta, e.alpha - z.alpha) < 1e-6) {
                if (z.residual < e.residual) e = z;
                dup = true;
                break;
            }
        }
        if (!dup) res.zeros.push_back(z);
    }
    std::sort(res.zeros.begin(), res.zeros.end(), [](const ZeroPoint& a, const ZeroPoint& b) {
        return a.alpha != b.alpha ? a.alpha < b.alpha : a.delta < b.delta;
    });
    return res;
}

int boundary_winding(const SweepGrid& region)
{
    validate_grid(region);
    const double d0 = region.detuning.min, d1 = region.detuning.max;
    const double a0 = region.alpha.min, a1 = region.alpha.max;
    // counterclockwise in the (Delta, alpha) plane
    const double cx[5] = {d0, d1, d1, d0, d0};
    const double cy[5] = {a0, a0, a1, a1, a0};
    const int counts[4] = {region.detuning.count, region.alpha.count, region.detuning.count,
                           region.alpha.count};

    auto phase = [&](double x, double y) {
        const cplx p = total_p2_at(region, x, y);
        if (p == cplx(0.0)) throw NumericalError("zero on the region boundary");
        return std::arg(p);
    };
    double total = 0.0;
    for (int e = 0; e < 4; ++e) {
        const int n = std::max(counts[e], 2) - 1;
        auto pt = [&](double t) { return std::pair{cx[e] + (cx[e + 1] - cx[e]) * t, cy[e] + (cy[e + 1] - cy[e]) * t}; };
        for (int s = 0; s < n; ++s) {
            // adaptive subdivision until each phase step is below pi/4
            struct Seg {
                double t0, t1, p0, p1;
                int depth;
            };
            const double t0 = double(s) / n, t1 = double(s + 1) / n;
            auto [x0, y0] = pt(t0);
            auto [x1, y1] = pt(t1);
            std::vector<Seg> stack{{t0, t1, phase(x0, y0), phase(x1, y1), 0}};
            while (!stack.empty()) {
                Seg sg = stack.back();
                stack.pop_back();
                const double dp = wrap(sg.p1 - sg.p0);
                if (std::abs(dp) <= kPi / 4 || sg.depth >= 40) {
                    total += dp;
                    continue;
                }
                const double tm = 0.5 * (sg.t0 + sg.t1);
                auto [xm, ym] = pt(tm);
                const double pm = phase(xm, ym);
                stack.push_back({tm, sg.t1, pm, sg.p1, sg.depth + 1});
                stack.push_back({sg.t0, tm, sg.p0, pm, sg.depth + 1});
            }
        }
    }
    return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

int count_alpha_levels(const std::vector<ZeroPoint>& zeros, double tol)
{
    std::vector<double> a;
    for (const auto& z : zeros) a.push_back(z.alpha);
    std::sort(a.begin(), a.end());
    int levels = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (i == 0 || a[i] - a[i - 1] > tol) ++levels;
    return levels;
}

AlphaOpt alpha_opt(const SweepGrid& region)
{
    const ZeroSearch zs = find_zeros(region);
    if (zs.zeros.empty()) throw NumericalError("no perfect PB in region");
    AlphaOpt r;
    r.zeros = zs.zeros;
    const auto best = std::max_element(zs.zeros.begin(), zs.zeros.end(),
                                       [](const ZeroPoint& a, const ZeroPoint& b) { return a.alpha < b.alpha; });
    r.alpha_opt = best->alpha;
    r.delta_opt = std::abs(best->delta);
    r.levels = count_alpha_levels(zs.zeros);
    return r;
}

// ---------------------------------------------------------------- disorder

std::uint64_t instance_seed(std::uint64_t seed, int instance)
{
    return splitmix64(seed ^ splitmix64(0x5eed0000ULL + static_cast<std::uint64_t>(instance)));
}

std::vector<EnsembleRow> disorder_ensemble(const SweepGrid& grid, double W, int n_instances,
                                           std::uint64_t seed, bool parallel)
{
    validate_grid(grid);
    if (!(W >= 0.0)) throw InvalidSpec("disorder strength must be >= 0");
    if (n_instances < 1) throw InvalidSpec("need at least one disorder instance");
    const std::size_t n = grid.size();
    std::vector<std::vector<double>> vals(static_cast<std::size_t>(n_instances));

#pragma omp parallel for schedule(dynamic, 1) if (parallel)
    for (int k = 0; k < n_instances; ++k) {
        // one physical sample per instance, shared by every grid point (kappa = 1 throughout)
        const SystemSpec drawn = sample_disorder(spec_at(grid, grid.alpha.at(0)), W, instance_seed(seed, k));
        const Table t = sweep_serial(grid, QG2, drawn.cavity_detune_disorder, drawn.atom_detune_disorder);
        auto& v = vals[static_cast<std::size_t>(k)];
        v.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            v[i] = t[i].err.empty() ? t[i].g2 : std::numeric_limits<double>::quiet_NaN();
    }

    std::vector<EnsembleRow> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        EnsembleRow& r = out[i];
        r.delta_over_kappa = grid.detuning.at(int(i / std::size_t(grid.alpha.count)));
        r.alpha = grid.alpha.at(int(i % std::size_t(grid.alpha.count)));
        double slog = 0.0, s = 0.0, mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (const auto& v : vals) {
            const double x = v[i];
            if (std::isnan(x)) continue;
            ++r.count;
            slog += std::log(x);
            s += x;
            mn = std::min(mn, x);
            mx = std::max(mx, x);
        }
        if (r.count == 0) continue;
        // identical samples (W = 0 or one instance) reproduce the value exactly
        r.geo_mean = (mn == mx) ? mn : std::exp(slog / r.count);
        r.arith_mean = (mn == mx) ? mn : s / r.count;
        r.min = mn;
    }
    return out;
}

// ---------------------------------------------------------------- fits

std::string to_string(FitForm f)
{
    switch (f) {
    case FitForm::AlphaOptForm: return "AlphaOptForm";
    case FitForm::DeltaOptForm: return "DeltaOptForm";
    case FitForm::PowerLaw: return "PowerLaw";
    case FitForm::LogLinear: return "LogLinear";
    }
    return "?";
}

FitForm fit_form_from_string(const std::string& s)
{
    if (s == "AlphaOptForm" || s == "alpha") return FitForm::AlphaOptForm;
    if (s == "DeltaOptForm" || s == "delta") return FitForm::DeltaOptForm;
    if (s == "PowerLaw" || s == "power") return FitForm::PowerLaw;
    if (s == "LogLinear" || s == "loglinear") return FitForm::LogLinear;
    throw InvalidSpec("unknown fit form '" + s + "'");
}

int fit_param_count(FitForm f)
{
    switch (f) {
    case FitForm::AlphaOptForm: return 5;
    case FitForm::DeltaOptForm: return 3;
    default: return 2;
    }
}

std::vector<double> default_initial_guess(FitForm f)
{
    switch (f) {
    case FitForm::AlphaOptForm: return {1.103, 0.456, 0.294, 0.089, -0.795};  // c1 a1 c2 a2 eta
    case FitForm::DeltaOptForm: return {0.593, 0.354, -0.574};                // h_inf c3 gamma
    case FitForm::PowerLaw: return {1.0, -1.0};
    case FitForm::LogLinear: return {0.0, -0.1};
    }
    return {};
}

double fit_model(FitForm f, const std::vector<double>& p, double N)
{
    switch (f) {
    case FitForm::AlphaOptForm:
        return 1.0 - std::pow(N, p[4]) * (p[0] * std::exp(-p[1] * N) + p[2] * std::exp(-p[3] * N));
    case FitForm::DeltaOptForm: return p[0] - p[1] * std::pow(N, p[2]);
    case FitForm::PowerLaw: return p[0] * std::pow(N, p[1]);
    case FitForm::LogLinear: return std::exp(p[0] + p[1] * N);
    }
    return 0.0;
}

FitResult fit_scaling(const std::vector<std::pair<double, double>>& points, FitForm form,
                      std::vector<double> p)
{
    const int np = fit_param_count(form);
    if (p.empty()) p = default_initial_guess(form);
    if (static_cast<int>(p.size()) != np) throw InvalidSpec("initial guess has the wrong length");
    if (static_cast<int>(points.size()) < np) throw InvalidSpec("fewer points than parameters");
    const int m = static_cast<int>(points.size());

    FitResult res;
    res.form = form;
    Eigen::VectorXd y(m);

    if (form == FitForm::LogLinear) {
        Eigen::MatrixXd A(m, 2);
        for (int i = 0; i < m; ++i) {
            if (!(points[i].second > 0.0)) throw InvalidSpec("log-linear fit needs positive values");
            A(i, 0) = 1.0;
            A(i, 1) = points[i].first;
            y(i) = std::log(points[i].second);
        }
        const Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
        if (!c.allFinite()) throw NumericalError("singular Jacobian in log-linear fit");
        res.params = {c(0), c(1)};
        res.sse = (A * c - y).squaredNorm();
        res.iterations = 1;
    } else {
        for (int i = 0; i < m; ++i) y(i) = points[i].second;
        auto resid = [&](const std::vector<double>& q) {
            Eigen::VectorXd r(m);
            for (int i = 0; i < m; ++i) r(i) = fit_model(form, q, points[i].first) - y(i);
            return r;
        };
        Eigen::VectorXd r = resid(p);
        double sse = r.squaredNorm();
        if (!std::isfinite(sse)) throw NumericalError("fit: non-finite residual at the initial guess");
        double lambda = 1e-3;
        bool converged = false;
        int it = 0;
        for (; it < 500; ++it) {
            Eigen::MatrixXd J(m, np);
            for (int k = 0; k < np; ++k) {
                const double h = 1e-7 * std::max(1.0, std::abs(p[k]));
                auto pp = p, pm = p;
                pp[k] += h;
                pm[k] -= h;
                J.col(k) = (resid(pp) - resid(pm)) / (2.0 * h);
            }
            const Eigen::MatrixXd JtJ = J.transpose() * J;
            const Eigen::VectorXd g = J.transpose() * r;
            if (!JtJ.allFinite()) throw NumericalError("fit: non-finite Jacobian");
            if (g.norm() <= 1e-14 * std::max(1.0, sse) || sse < 1e-30) {
                converged = true;
                break;
            }
            bool accepted = false;
            while (lambda < 1e16) {
                Eigen::MatrixXd A = JtJ;
                for (int k = 0; k < np; ++k) A(k, k) += lambda * std::max(JtJ(k, k), 1e-12);
                const Eigen::VectorXd step = -A.ldlt().solve(g);
                if (!step.allFinite()) throw NumericalError("fit: singular Jacobian");
                auto trial = p;
                for (int k = 0; k < np; ++k) trial[k] += step(k);
                const Eigen::VectorXd rt = resid(trial);
                const double st = rt.squaredNorm();
                if (std::isfinite(st) && st < sse) {
                    double pn = 0.0;
                    for (double v : p) pn += v * v;
                    const bool tiny = step.norm() <= 1e-12 * (std::sqrt(pn) + 1e-12) ||
                                      (sse - st) <= 1e-15 * sse;
                    p = trial;
                    r = rt;
                    sse = st;
                    lambda = std::max(lambda / 3.0, 1e-12);
                    accepted = true;
                    if (tiny) converged = true;
                    break;
                }
                lambda *= 4.0;
            }
            if (!accepted) {
                converged = true;  // no descent direction left: at a minimum
                break;
            }
            if (converged) break;
        }
        if (!converged) throw NumericalError("fit did not converge in 500 iterations");
        res.params = p;
        res.sse = sse;
        res.iterations = it;
    }

    const double mean = y.mean();
    const double sst = (y.array() - mean).square().sum();
    res.r2 = sst > 0.0 ? std::clamp(1.0 - res.sse / sst, 0.0, 1.0) : 1.0;
    return res;
}

// ---------------------------------------------------------------- output

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

static std::string csv_field(std::string s)
{
    for (auto& c : s)
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
    return s;
}

void write_table_csv(std::ostream& os, const Table& t)
{
    os << "delta_over_kappa,alpha,g2,g3,T,R,arg_p2,label,err\n";
    for (const auto& r : t) {
        os << format_double(r.delta_over_kappa) << ',' << format_double(r.alpha) << ','
           << format_double(r.g2) << ',' << format_double(r.g3) << ',' << format_double(r.T) << ','
           << format_double(r.R) << ',' << format_double(r.arg_p2) << ',' << csv_field(r.label) << ','
           << csv_field(r.err) << '\n';
    }
}

void write_ensemble_csv(std::ostream& os, const std::vector<EnsembleRow>& t)
{
    os << "delta_over_kappa,alpha,geo_mean_g2,arith_mean_g2,min_g2,count\n";
    for (const auto& r : t) {
        os << format_double(r.delta_over_kappa) << ',' << format_double(r.alpha) << ','
           << format_double(r.geo_mean) << ',' << format_double(r.arith_mean) << ','
           << format_double(r.min) << ',' << r.count << '\n';
    }
}

nlohmann::json grid_to_json(const SweepGrid& g)
{
    nlohmann::json j;
    j["detuning"] = {{"min", g.detuning.min}, {"max", g.detuning.max}, {"count", g.detuning.count}};
    j["alpha"] = {{"min", g.alpha.min}, {"max", g.alpha.max}, {"count", g.alpha.count}};
    j["g"] = g.g;
    j["n_cells"] = g.n_cells;
    j["hop_phase"] = g.hop_phase;
    j["atom_loss"] = g.atom_loss;
    j["cavity_loss"] = g.cavity_loss;
    j["atom_offset"] = g.atom_offset;
    j["kind"] = to_string(g.kind);
    j["L"] = g.L();
    return j;
}

SweepGrid grid_from_json(const nlohmann::json& j)
{
    SweepGrid g;
    try {
        auto axis = [](const nlohmann::json& a) {
            return Axis{a.at("min").get<double>(), a.at("max").get<double>(), a.at("count").get<int>()};
        };
        g.detuning = axis(j.at("detuning"));
        g.alpha = axis(j.at("alpha"));
        g.g = j.at("g").get<double>();
        g.n_cells = j.at("n_cells").get<int>();
        g.hop_phase = j.at("hop_phase").get<double>();
        g.atom_loss = j.at("atom_loss").get<double>();
        g.cavity_loss = j.at("cavity_loss").get<double>();
        g.atom_offset = j.at("atom_offset").get<double>();
        g.kind = kind_from_string(j.at("kind").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("malformed grid: ") + e.what());
    }
    validate_grid(g);
    return g;
}

}  // namespace chiralpb
