#include "chiralpb/cli.hpp"

#include "chiralpb/analytic.hpp"
#include "chiralpb/config.hpp"
#include "chiralpb/explore.hpp"
#include "chiralpb/lindblad.hpp"
#include "chiralpb/scatter.hpp"

#include "CLI11.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace chiralpb {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Collects output files; the manifest is written only when at least one file exists.
class Outputs {
public:
    Outputs(std::string primary, bool force, std::ostream& out) : primary_(std::move(primary)), force_(force), out_(out) {}

    bool to_stdout() const { return primary_.empty(); }

    std::string manifest_path() const { return primary_ + ".json"; }

    void check_free(const std::string& path) const
    {
        if (!force_ && fs::exists(path))
            throw UsageError("output path '" + path + "' exists (use --force to overwrite)");
    }

    // Sibling file "<stem>_<suffix>.csv" next to the primary output.
    std::string sibling(const std::string& suffix) const
    {
        fs::path p(primary_);
        return (p.parent_path() / (p.stem().string() + "_" + suffix + p.extension().string())).string();
    }

    void preflight(const std::vector<std::string>& extra = {}) const
    {
        if (to_stdout()) return;
        check_free(primary_);
        check_free(manifest_path());
        for (const auto& e : extra) check_free(e);
    }

    void write(const std::string& path, const std::string& content)
    {
        if (path.empty()) {
            out_ << content;
            return;
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) throw UsageError("cannot write '" + path + "'");
        f << content;
        written_.push_back(path);
    }

    const std::vector<std::string>& written() const { return written_; }
    const std::string& primary() const { return primary_; }

private:
    std::string primary_;
    bool force_;
    std::ostream& out_;
    std::vector<std::string> written_;
};

struct GridOpts {
    int N = 1;
    double g = 0.8;
    double dmin = -0.8, dmax = 0.8;
    int dcount = 41;
    double amin = 0.001, amax = 0.999;
    int acount = 41;
    int L = 0;
    std::string kind = "SideCoupledCavityAtom";
    double gamma_e = 0.0, kappa_ext = 0.0, phi = 2.0 * kPi, atom_offset = 0.0;

    void add(CLI::App* c)
    {
        c->add_option("--N", N, "number of cells");
        c->add_option("--g", g, "coupling g/kappa");
        c->add_option("--dmin", dmin, "detuning axis minimum (units of kappa)");
        c->add_option("--dmax", dmax, "detuning axis maximum (units of kappa)");
        c->add_option("--dcount", dcount, "detuning axis count");
        c->add_option("--amin", amin, "chirality axis minimum");
        c->add_option("--amax", amax, "chirality axis maximum");
        c->add_option("--acount", acount, "chirality axis count");
        c->add_option("--L", L, "per-axis sampling count (overrides both counts)");
        c->add_option("--kind", kind, "SideCoupledCavityAtom | DirectCoupledCavityAtom | SideCoupledBareAtom");
        c->add_option("--gamma-e", gamma_e, "atom loss (units of kappa)");
        c->add_option("--kappa-ext", kappa_ext, "cavity loss (units of kappa)");
        c->add_option("--phi", phi, "inter-cell phase (rad)");
        c->add_option("--atom-offset", atom_offset, "omega_e - omega_c (units of kappa)");
    }

    SweepGrid grid() const
    {
        SweepGrid s;
        s.detuning = {dmin, dmax, L > 0 ? L : dcount};
        s.alpha = {amin, amax, L > 0 ? L : acount};
        s.g = g;
        s.n_cells = N;
        s.hop_phase = phi;
        s.atom_loss = gamma_e;
        s.cavity_loss = kappa_ext;
        s.atom_offset = atom_offset;
        s.kind = kind_from_string(kind);
        validate_grid(s);
        return s;
    }
};

json base_manifest(const std::string& cmd)
{
    json m;
    m["subcommand"] = cmd;
    m["tool_version"] = kToolVersion;
    return m;
}

void finish_manifest(Outputs& o, json m, std::chrono::steady_clock::time_point t0)
{
    if (o.written().empty()) return;
    m["outputs"] = o.written();
    m["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream f(o.manifest_path(), std::ios::binary);
    if (!f) throw UsageError("cannot write manifest '" + o.manifest_path() + "'");
    f << m.dump(2) << '\n';
}

SpecDocument load_config(const std::string& path, std::optional<double> alpha, const std::string& units)
{
    SpecDocument d = load_spec_file(path);
    if (!units.empty()) d.units = units_from_string(units);
    if (alpha) {
        const double a = *alpha;
        if (!(a >= 0.0)) throw InvalidSpec("--alpha must be >= 0");
        if (d.units == Units::Kappa) {
            const double k = d.spec.kappa();
            d.spec.kappa_r = k / (1.0 + a);
            d.spec.kappa_l = a * k / (1.0 + a);
        } else {
            d.spec.kappa_l = a * d.spec.kappa_r;
        }
        d.spec = validate_spec(d.spec);
    }
    return d;
}

void apply_threads(std::optional<int> threads)
{
    int n = 0;
    if (threads) {
        n = *threads;
    } else if (const char* env = std::getenv("CHIRALPB_THREADS")) {
        try {
            n = std::stoi(env);
        } catch (const std::exception&) {
            throw UsageError("CHIRALPB_THREADS must be an integer");
        }
    }
    if (n < 0) throw UsageError("thread count must be >= 1");
    if (n > 0) omp_set_num_threads(n);
}

std::string row_csv(const Table& t)
{
    std::ostringstream os;
    write_table_csv(os, t);
    return os.str();
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<std::pair<double, double>> read_points(const std::string& path, const std::string& inline_pts)
{
    std::vector<std::pair<double, double>> pts;
    auto parse_pair = [&](const std::string& a, const std::string& b) {
        try {
            pts.emplace_back(std::stod(a), std::stod(b));
        } catch (const std::exception&) {
            throw InvalidSpec("malformed fit point '" + a + "," + b + "'");
        }
    };
    if (!inline_pts.empty()) {
        std::stringstream ss(inline_pts);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto c = item.find(':');
            if (c == std::string::npos) throw InvalidSpec("points must look like N:value,N:value");
            parse_pair(item.substr(0, c), item.substr(c + 1));
        }
    }
    if (!path.empty()) {
        std::ifstream f(path);
        if (!f) throw InvalidSpec("cannot open '" + path + "'");
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto c = line.find(',');
            if (c == std::string::npos) throw InvalidSpec("fit input rows must be N,value");
            const std::string a = line.substr(0, c);
            std::string b = line.substr(c + 1);
            if (auto c2 = b.find(','); c2 != std::string::npos) b = b.substr(0, c2);
            char* end = nullptr;
            std::strtod(a.c_str(), &end);
            if (end == a.c_str()) continue;  // header
            parse_pair(a, b);
        }
    }
    return pts;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"chiralpb: photon blockade in chiral cavity-atom arrays"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    std::string out_path;
    bool force = false;
    std::optional<int> threads;
    auto common = [&](CLI::App* c) {
        c->add_option("-o,--out", out_path, "CSV output path (stdout when omitted; no manifest then)");
        c->add_flag("--force", force, "overwrite existing outputs");
        c->add_option("--threads", threads, "worker threads (default: CHIRALPB_THREADS or all cores)");
    };

    // point
    auto* c_point = app.add_subcommand("point", "single scattering evaluation");
    std::string cfg;
    double delta = 0.0;
    std::optional<double> alpha;
    c_point->add_option("--config", cfg, "spec document (JSON)")->required();
    c_point->add_option("--delta", delta, "detuning omega_c - omega_d (config units)");
    c_point->add_option("--alpha", alpha, "override chirality kappa_l/kappa_r");
    std::string punits;
    c_point->add_option("--units", punits, "kappa_r|kappa; overrides the config's units key");
    common(c_point);

    // sweep
    auto* c_sweep = app.add_subcommand("sweep", "grid sweep over (Delta/kappa, alpha)");
    GridOpts gsweep;
    gsweep.dmin = -1.0;
    gsweep.dmax = 1.0;
    gsweep.amin = 0.0;
    gsweep.amax = 1.0;
    std::string quantities = "g2,g3,T,R,arg_p2,label";
    bool serial = false;
    gsweep.add(c_sweep);
    c_sweep->add_option("--quantities", quantities, "comma list of g2,g3,T,R,arg_p2,label");
    c_sweep->add_flag("--serial", serial, "use the single-threaded reference path");
    common(c_sweep);

    // zeros
    auto* c_zeros = app.add_subcommand("zeros", "locate perfect-blockade zeros of the two-photon amplitude");
    GridOpts gzeros;
    gzeros.add(c_zeros);
    common(c_zeros);

    // alpha-opt
    auto* c_aopt = app.add_subcommand("alpha-opt", "optimal chirality versus N");
    GridOpts gaopt;
    int nmin = 1, nmax = 10;
    gaopt.add(c_aopt);
    c_aopt->add_option("--Nmin", nmin, "first N");
    c_aopt->add_option("--Nmax", nmax, "last N");
    common(c_aopt);

    // disorder
    auto* c_dis = app.add_subcommand("disorder", "geometric-mean g2 over frequency-disorder instances");
    GridOpts gdis;
    double W = 0.1;
    int instances = 100;
    std::uint64_t seed = 1;
    gdis.add(c_dis);
    c_dis->add_option("--W", W, "disorder strength (units of kappa)");
    c_dis->add_option("--instances", instances, "number of instances");
    c_dis->add_option("--seed", seed, "ensemble seed");
    common(c_dis);

    // validate
    auto* c_val = app.add_subcommand("validate", "scattering vs master equation (and trajectories)");
    std::string vcfg;
    double omega = 1e-3;
    double vdmin = std::nan(""), vdmax = std::nan("");
    int vcount = 21;
    double slope_delta = 0.0;
    int photons = 3;
    int ntraj = 0;
    double traj_omega = std::nan(""), traj_dt = 1e-2, traj_t = 1e3;
    std::uint64_t traj_seed = 1;
    std::optional<double> valpha;
    c_val->add_option("--config", vcfg, "spec document (JSON)")->required();
    c_val->add_option("--alpha", valpha, "override chirality");
    std::string vunits;
    c_val->add_option("--units", vunits, "kappa_r|kappa; overrides the config's units key");
    c_val->add_option("--omega", omega, "drive amplitude (config units)");
    c_val->add_option("--dmin", vdmin, "sweep start (config units; default -kappa)");
    c_val->add_option("--dmax", vdmax, "sweep end (config units; default +kappa)");
    c_val->add_option("--dcount", vcount, "sweep points");
    c_val->add_option("--slope-delta", slope_delta, "detuning of the drive-scaling table (config units)");
    c_val->add_option("--photons", photons, "photons per cavity in the truncated space");
    c_val->add_option("--trajectories", ntraj, "also run this many trajectories at the scaling point");
    c_val->add_option("--traj-omega", traj_omega, "trajectory drive (config units; default = --omega)");
    c_val->add_option("--traj-dt", traj_dt, "trajectory step (units of 1/kappa)");
    c_val->add_option("--traj-t", traj_t, "trajectory snapshot time (units of 1/kappa)");
    c_val->add_option("--seed", traj_seed, "trajectory seed");
    common(c_val);

    // fit
    auto* c_fit = app.add_subcommand("fit", "least-squares scaling fit of (N, value) points");
    std::string fit_in, fit_pts, fit_form = "LogLinear";
    std::vector<double> fit_init;
    c_fit->add_option("--input", fit_in, "CSV with N,value rows");
    c_fit->add_option("--points", fit_pts, "inline points N:value,N:value,...");
    c_fit->add_option("--form", fit_form, "AlphaOptForm | DeltaOptForm | PowerLaw | LogLinear");
    c_fit->add_option("--init", fit_init, "initial guess")->delimiter(',');
    common(c_fit);

    // curve
    auto* c_curve = app.add_subcommand("curve", "analytic parameter curves");
    std::string which = "single";
    double camin = 0.0, camax = 0.99;
    int ccount = 100;
    c_curve->add_option("--which", which, "single (single-cavity g/kappa), odd (odd-N resonant g/kappa), survival");
    c_curve->add_option("--amin", camin, "first alpha");
    c_curve->add_option("--amax", camax, "last alpha");
    c_curve->add_option("--count", ccount, "points");
    common(c_curve);

    std::vector<std::string> argv_s = args;
    if (argv_s.empty()) argv_s.push_back("chiralpb");
    std::vector<char*> argv;
    for (auto& s : argv_s) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        apply_threads(threads);
        Outputs o(out_path, force, out);

        if (*c_point) {
            const SpecDocument d = load_config(cfg, alpha, punits);
            o.preflight();
            const SystemSpec& s = d.spec;
            const DriveFrame f = frame_at_detuning(s, delta);
            Row r;
            r.delta_over_kappa = delta / s.kappa();
            r.alpha = s.alpha();
            try {
                const ScatterResult sr = evaluate(s, f, 3);
                r.g2 = sr.g2;
                r.g3 = sr.g3;
                r.T = sr.T;
                r.R = sr.R;
                r.arg_p2 = sr.arg_p2;
                r.label = to_string(sr.label);
            } catch (const NumericalError& e) {
                r.err = e.what();
            }
            o.write(out_path, row_csv({r}));
            json m = base_manifest("point");
            m["spec"] = spec_to_json(s, d.units);
            m["units"] = to_string(d.units);
            m["delta"] = delta;
            finish_manifest(o, m, t0);
            return r.err.empty() ? 0 : 2;
        }

        if (*c_sweep) {
            const SweepGrid g = gsweep.grid();
            unsigned q = 0;
            std::stringstream ss(quantities);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (item == "g2") q |= QG2;
                else if (item == "g3") q |= QG3;
                else if (item == "T") q |= QT;
                else if (item == "R") q |= QR;
                else if (item == "arg_p2") q |= QArg;
                else if (item == "label") q |= QLabel;
                else throw UsageError("unknown quantity '" + item + "'");
            }
            o.preflight();
            const Table t = serial ? sweep_serial(g, q) : sweep(g, q);
            o.write(out_path, row_csv(t));
            json m = base_manifest("sweep");
            m["grid"] = grid_to_json(g);
            m["spec"] = spec_to_json(spec_at(g, g.alpha.min), Units::Kappa);
            m["units"] = "kappa";
            m["quantities"] = quantities;
            finish_manifest(o, m, t0);
            return 0;
        }

        if (*c_zeros) {
            const SweepGrid g = gzeros.grid();
            o.preflight();
            const ZeroSearch zs = find_zeros(g);
            std::ostringstream os;
            os << "delta_over_kappa,alpha,residual,winding,g2\n";
            for (const auto& z : zs.zeros)
                os << format_double(z.delta) << ',' << format_double(z.alpha) << ',' << format_double(z.residual)
                   << ',' << z.winding << ',' << format_double(z.g2) << '\n';
            o.write(out_path, os.str());
            err << "zeros: " << zs.zeros.size() << " converged, " << zs.unconverged.size()
                << " unconverged of " << zs.flagged << " flagged plaquettes\n";
            json m = base_manifest("zeros");
            m["grid"] = grid_to_json(g);
            m["spec"] = spec_to_json(spec_at(g, g.alpha.min), Units::Kappa);
            m["units"] = "kappa";
            m["unconverged"] = zs.unconverged.size();
            finish_manifest(o, m, t0);
            return 0;
        }

        if (*c_aopt) {
            if (nmin < 1 || nmax < nmin) throw UsageError("need 1 <= Nmin <= Nmax");
            o.preflight();
            std::ostringstream os;
            os << "N,alpha_opt,delta_opt,levels,zeros,err\n";
            for (int N = nmin; N <= nmax; ++N) {
                GridOpts go = gaopt;
                go.N = N;
                const SweepGrid g = go.grid();
                try {
                    const AlphaOpt a = alpha_opt(g);
                    os << N << ',' << format_double(a.alpha_opt) << ',' << format_double(a.delta_opt) << ','
                       << a.levels << ',' << a.zeros.size() << ",\n";
                } catch (const NumericalError& e) {
                    os << N << ",nan,nan,0,0," << e.what() << '\n';
                }
            }
            o.write(out_path, os.str());
            json m = base_manifest("alpha-opt");
            GridOpts go = gaopt;
            m["grid"] = grid_to_json(go.grid());
            m["N_range"] = {nmin, nmax};
            m["units"] = "kappa";
            finish_manifest(o, m, t0);
            return 0;
        }

        if (*c_dis) {
            const SweepGrid g = gdis.grid();
            o.preflight();
            const auto rows = disorder_ensemble(g, W, instances, seed);
            std::ostringstream os;
            write_ensemble_csv(os, rows);
            o.write(out_path, os.str());
            json m = base_manifest("disorder");
            m["grid"] = grid_to_json(g);
            m["spec"] = spec_to_json(spec_at(g, g.alpha.min), Units::Kappa);
            m["units"] = "kappa";
            m["W"] = W;
            m["instances"] = instances;
            m["seed"] = seed;
            finish_manifest(o, m, t0);
            return 0;
        }

        if (*c_val) {
            const SpecDocument d = load_config(vcfg, valpha, vunits);
            const SystemSpec& s = d.spec;
            const double k = s.kappa();
            if (std::isnan(vdmin)) vdmin = -k;
            if (std::isnan(vdmax)) vdmax = k;
            if (vcount < 1) throw UsageError("--dcount must be >= 1");
            if (!(omega > 0.0)) throw UsageError("--omega must be > 0");
            const std::string scaling_path = o.to_stdout() ? "" : o.sibling("scaling");
            o.preflight({scaling_path});
            const TruncationSpec tr{photons};
            const bool full = std::size_t(make_fock_space(s, tr)->dim) * std::size_t(make_fock_space(s, tr)->dim) <=
                              kNullSpaceCap;
            const SteadyMethod method = full ? SteadyMethod::NullSpace : SteadyMethod::TimeEvolve;
            auto me_g2 = [&](double dl, double om) {
                const DriveFrame f = frame_at_detuning(s, dl, om);
                return me_correlation(steady_state(build_liouvillian(s, f, tr), method), s, f, 2);
            };

            std::ostringstream os;
            os << "delta_over_kappa,g2_scatter,g2_master,rel_dev\n";
            double maxdev = 0.0;
            for (int i = 0; i < vcount; ++i) {
                const double dl = vcount == 1 ? vdmin : vdmin + (vdmax - vdmin) * i / (vcount - 1);
                const double sc = correlation(s, frame_at_detuning(s, dl), 2);
                const double me = me_g2(dl, omega);
                const double rel = std::abs(me - sc) / sc;
                maxdev = std::max(maxdev, rel);
                os << format_double(dl / k) << ',' << format_double(sc) << ',' << format_double(me) << ','
                   << format_double(rel) << '\n';
            }
            o.write(out_path, os.str());

            std::ostringstream ts;
            ts << "omega_over_kappa,g2_master,abs_dev\n";
            const double sc0 = correlation(s, frame_at_detuning(s, slope_delta), 2);
            std::vector<double> xs, ys;
            for (double f : {1.0, 2.0, 4.0, 8.0}) {
                const double om = omega * f;
                const double me = me_g2(slope_delta, om);
                xs.push_back(om);
                ys.push_back(std::abs(me - sc0));
                ts << format_double(om / k) << ',' << format_double(me) << ',' << format_double(ys.back()) << '\n';
            }
            const double slope = loglog_slope(xs, ys);
            o.write(scaling_path, ts.str());

            out << "max_rel_dev=" << format_double(maxdev) << "\n";
            out << "drive_scaling_slope=" << format_double(slope) << "\n";
            json m = base_manifest("validate");
            m["spec"] = spec_to_json(s, d.units);
            m["units"] = to_string(d.units);
            m["omega"] = omega;
            m["method"] = full ? "NullSpace" : "TimeEvolve";
            m["photons_per_cavity"] = photons;
            m["max_rel_dev"] = maxdev;
            m["drive_scaling_slope"] = slope;
            if (ntraj > 0) {
                const double tom = std::isnan(traj_omega) ? omega : traj_omega;
                TrajectoryConfig tc;
                tc.dt = traj_dt;
                tc.t_steady = traj_t;
                tc.n_traj = ntraj;
                tc.seed = traj_seed;
                const DriveFrame f = frame_at_detuning(s, slope_delta, tom);
                const TrajectoryResult trj = trajectory_g2(s, f, tr, tc);
                const double me = me_g2(slope_delta, tom);
                out << "trajectory_g2=" << format_double(trj.estimate) << " +- " << format_double(trj.std_error)
                    << " master_g2=" << format_double(me) << "\n";
                m["trajectory"] = {{"n_traj", ntraj}, {"seed", traj_seed}, {"dt", traj_dt}, {"t_steady", traj_t},
                                   {"omega", tom}, {"estimate", trj.estimate}, {"std_error", trj.std_error},
                                   {"master_g2", me}};
            }
            finish_manifest(o, m, t0);
            return 0;
        }

        if (*c_fit) {
            const auto pts = read_points(fit_in, fit_pts);
            const FitForm form = fit_form_from_string(fit_form);
            o.preflight();
            const FitResult fr = fit_scaling(pts, form, fit_init);
            std::ostringstream os;
            os << "name,value\n";
            for (std::size_t i = 0; i < fr.params.size(); ++i) os << 'p' << i << ',' << format_double(fr.params[i]) << '\n';
            os << "sse," << format_double(fr.sse) << "\nr2," << format_double(fr.r2) << '\n';
            o.write(out_path, os.str());
            json m = base_manifest("fit");
            m["form"] = to_string(form);
            m["points"] = pts;
            m["initial_guess"] = fit_init.empty() ? default_initial_guess(form) : fit_init;
            finish_manifest(o, m, t0);
            return 0;
        }

        if (*c_curve) {
            if (ccount < 1) throw UsageError("--count must be >= 1");
            o.preflight();
            std::ostringstream os;
            os << "alpha,value\n";
            for (int i = 0; i < ccount; ++i) {
                const double a = ccount == 1 ? camin : camin + (camax - camin) * i / (ccount - 1);
                double v;
                if (which == "single") v = pb_curve_single(a);
                else if (which == "odd") v = odd_resonant(a, 1.0, 1.0).curve_g_over_kappa;
                else if (which == "survival") v = survival_limit(a);
                else throw UsageError("unknown curve '" + which + "'");
                os << format_double(a) << ',' << format_double(v) << '\n';
            }
            o.write(out_path, os.str());
            json m = base_manifest("curve");
            m["which"] = which;
            m["alpha_range"] = {camin, camax, ccount};
            finish_manifest(o, m, t0);
            return 0;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const InvalidSpec& e) {
        err << "invalid input: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

int run(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace chiralpb
