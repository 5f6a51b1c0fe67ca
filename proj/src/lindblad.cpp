#include "chiralpb/lindblad.hpp"

#include "chiralpb/rng.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>

namespace chiralpb {

void validate_trajectory_config(const TrajectoryConfig& c)
{
    if (!(c.dt > 0.0)) throw InvalidSpec("trajectory dt must be > 0");
    if (c.dt > 0.1) throw InvalidSpec("trajectory dt must be <= 0.1/kappa");
    if (!(c.t_steady > 0.0)) throw InvalidSpec("t_steady must be > 0");
    if (c.n_traj < 1) throw InvalidSpec("n_traj must be >= 1");
    if (c.n_bootstrap < 2) throw InvalidSpec("n_bootstrap must be >= 2");
}

std::shared_ptr<const FockSpace> make_fock_space(const SystemSpec& spec, const TruncationSpec& trunc,
                                                 std::size_t cap)
{
    if (trunc.photons_per_cavity < 1) throw InvalidSpec("photons_per_cavity must be >= 1");
    auto fs = std::make_shared<FockSpace>();
    fs->n_cells = spec.n_cells;
    fs->cutoff = trunc.photons_per_cavity;
    fs->atoms_only = spec.bare_atoms();

    const int N = spec.n_cells;
    std::vector<int> local(2 * static_cast<std::size_t>(N));
    double total = 1.0;
    for (int j = 0; j < N; ++j) {
        local[2 * j] = fs->atoms_only ? 1 : fs->cutoff + 1;
        local[2 * j + 1] = 2;
        total *= local[2 * j] * local[2 * j + 1];
    }
    if (total > static_cast<double>(cap))
        throw InvalidSpec("truncated Hilbert space too large (" + std::to_string(total) + " states)");
    const int dim = static_cast<int>(total);
    fs->dim = dim;

    std::vector<int> stride(local.size());
    int acc = 1;
    for (int p = static_cast<int>(local.size()) - 1; p >= 0; --p) {
        stride[p] = acc;
        acc *= local[p];
    }
    auto occ = [&](int idx, int p) { return (idx / stride[p]) % local[p]; };

    fs->excitations.resize(dim);
    for (int i = 0; i < dim; ++i) {
        int n = 0;
        for (std::size_t p = 0; p < local.size(); ++p) n += occ(i, static_cast<int>(p));
        fs->excitations[i] = n;
    }

    auto lowering = [&](int p) {
        std::vector<Eigen::Triplet<cplx>> t;
        for (int i = 0; i < dim; ++i) {
            const int c = occ(i, p);
            if (c > 0) t.emplace_back(i - stride[p], i, std::sqrt(double(c)));
        }
        SpMat m(dim, dim);
        m.setFromTriplets(t.begin(), t.end());
        return m;
    };
    for (int j = 0; j < N; ++j) {
        fs->atom.push_back(lowering(2 * j + 1));
        fs->mode.push_back(fs->atoms_only ? fs->atom.back() : lowering(2 * j));
    }
    return fs;
}

namespace {

SpMat graded(const SpMat& x, const std::vector<int>& exc, double s)
{
    if (s == 1.0) return x;
    SpMat y = x;
    for (int k = 0; k < y.outerSize(); ++k)
        for (SpMat::InnerIterator it(y, k); it; ++it)
            it.valueRef() *= std::pow(s, exc[it.col()] - exc[it.row()]);
    return y;
}

SpMat identity(int d)
{
    SpMat I(d, d);
    I.setIdentity();
    return I;
}

}  // namespace

Generator build_liouvillian(const SystemSpec& spec_in, const DriveFrame& frame,
                            const TruncationSpec& trunc, bool graded_basis, std::size_t cap)
{
    const SystemSpec spec = validate_spec(spec_in);
    Generator G;
    G.space = make_fock_space(spec, trunc, cap);
    const FockSpace& F = *G.space;
    const int d = F.dim;
    const int N = spec.n_cells;
    const double k = spec.kappa();
    const double wd = frame.drive_freq;
    const double om = frame.drive_amp;
    const bool bare = spec.bare_atoms();
    G.kappa = k;
    G.scale = (graded_basis && om > 0.0) ? om / spec.kappa_r : 1.0;

    SpMat H(d, d);
    for (int j = 0; j < N; ++j) {
        const SpMat& a = F.mode[j];
        const SpMat& s = F.atom[j];
        const SpMat na = SpMat(a.adjoint()) * a;
        if (bare) {
            const double w = spec.atom_freq + spec.atom_detune_disorder[j] - wd;
            H += cplx(w, -0.5 * (k + spec.atom_loss)) * na;
        } else {
            const SpMat ns = SpMat(s.adjoint()) * s;
            const double wc = spec.cavity_freq + spec.cavity_detune_disorder[j] - wd;
            const double we = spec.atom_freq + spec.atom_detune_disorder[j] - wd;
            H += cplx(wc, -0.5 * (k + spec.cavity_loss)) * na;
            H += cplx(we, -0.5 * spec.atom_loss) * ns;
            const SpMat x = SpMat(a.adjoint()) * s;
            H += cplx(spec.coupling_g) * SpMat(x + SpMat(x.adjoint()));
        }
        for (int q = 0; q < j; ++q) {
            const cplx ph = std::polar(1.0, spec.hop_phase * (j - q));
            const SpMat& b = F.mode[q];
            H += (-kI * ph * spec.kappa_r) * SpMat(SpMat(a.adjoint()) * b);
            H += (-kI * ph * spec.kappa_l) * SpMat(SpMat(b.adjoint()) * a);
        }
        if (om > 0.0) {
            const cplx ph = std::polar(1.0, spec.hop_phase * j);
            H += (om * ph) * SpMat(a.adjoint());
            H += (om * std::conj(ph)) * a;
        }
    }

    SpMat Ar(d, d), Al(d, d);
    for (int j = 0; j < N; ++j) {
        Ar += (std::sqrt(spec.kappa_r) * std::polar(1.0, -spec.hop_phase * j)) * F.mode[j];
        Al += (std::sqrt(spec.kappa_l) * std::polar(1.0, spec.hop_phase * j)) * F.mode[j];
    }
    std::vector<SpMat> jumps{Ar};
    if (spec.kappa_l > 0.0) jumps.push_back(Al);
    for (int j = 0; j < N; ++j) {
        if (spec.atom_loss > 0.0) jumps.push_back(std::sqrt(spec.atom_loss) * F.atom[j]);
        if (!bare && spec.cavity_loss > 0.0) jumps.push_back(std::sqrt(spec.cavity_loss) * F.mode[j]);
    }

    const double coherent = spec.kind == Kind::DirectCoupledCavityAtom ? 0.0 : om / std::sqrt(spec.kappa_r);
    SpMat b = cplx(coherent) * identity(d) - kI * Ar;

    G.h = graded(H, F.excitations, G.scale);
    for (auto& L : jumps) G.jumps.push_back(graded(L, F.excitations, G.scale));
    G.output = graded(b, F.excitations, G.scale);
    for (auto& m : G.jumps) m.makeCompressed();
    G.h.makeCompressed();
    G.weight.resize(d);
    for (int i = 0; i < d; ++i) G.weight[i] = std::pow(G.scale, F.excitations[i]);
    return G;
}

CMat Generator::apply(const CMat& r) const
{
    const CMat hr = h * r;
    const CMat hra = h * r.adjoint();
    CMat out = -kI * hr + kI * CMat(hra.adjoint());
    for (const auto& L : jumps) {
        const CMat lr = L * r.adjoint();
        out += L * CMat(lr.adjoint());
    }
    return out;
}

CMat Generator::to_graded(const CMat& rho) const
{
    return weight.cwiseInverse().asDiagonal() * rho * weight.cwiseInverse().asDiagonal();
}

CMat Generator::to_physical(const CMat& r) const
{
    return weight.asDiagonal() * r * weight.asDiagonal();
}

CMat Generator::apply_physical(const CMat& rho) const
{
    return to_physical(apply(to_graded(rho)));
}

double Generator::weighted_trace(const CMat& r) const
{
    double t = 0.0;
    for (int i = 0; i < dim(); ++i) t += weight[i] * weight[i] * r(i, i).real();
    return t;
}

SpMat Generator::superoperator() const
{
    const int d = dim();
    std::vector<Eigen::Triplet<cplx>> t;
    for (int c = 0; c < h.outerSize(); ++c) {
        for (SpMat::InnerIterator it(h, c); it; ++it) {
            const int i = static_cast<int>(it.row()), j = static_cast<int>(it.col());
            for (int m = 0; m < d; ++m) {
                t.emplace_back(i + m * d, j + m * d, -kI * it.value());
                t.emplace_back(m + i * d, m + j * d, kI * std::conj(it.value()));
            }
        }
    }
    for (const auto& L : jumps) {
        for (int c1 = 0; c1 < L.outerSize(); ++c1)
            for (SpMat::InnerIterator x(L, c1); x; ++x)
                for (int c2 = 0; c2 < L.outerSize(); ++c2)
                    for (SpMat::InnerIterator y(L, c2); y; ++y)
                        t.emplace_back(y.row() + x.row() * d, y.col() + x.col() * d,
                                       std::conj(x.value()) * y.value());
    }
    SpMat S(d * d, d * d);
    S.setFromTriplets(t.begin(), t.end());
    return S;
}

namespace {

void finish(const Generator& gen, CMat& r, SteadyState& st)
{
    r = 0.5 * (r + CMat(r.adjoint()));
    const double tr = gen.weighted_trace(r);
    if (!(std::abs(tr) > 0.0) || !std::isfinite(tr)) throw NumericalError("steady state has zero trace");
    r /= tr;
    st.rho_graded = r;
    st.residual = gen.apply(r).norm();
}

}  // namespace

SteadyState steady_state(const Generator& gen, SteadyMethod method, const EvolveOptions& opt)
{
    SteadyState st;
    st.gen = std::make_shared<const Generator>(gen);
    const int d = gen.dim();

    if (method == SteadyMethod::NullSpace) {
        const std::size_t vd = static_cast<std::size_t>(d) * d;
        if (vd > kNullSpaceCap)
            throw InvalidSpec("full generator too large for the null-space solve (" + std::to_string(vd) +
                              "); use TimeEvolve");
        const SpMat S = gen.superoperator();
        std::vector<Eigen::Triplet<cplx>> t;
        for (int c = 0; c < S.outerSize(); ++c)
            for (SpMat::InnerIterator it(S, c); it; ++it)
                if (it.row() != 0) t.emplace_back(it.row(), it.col(), it.value());
        // row 0 (the vacuum population equation) is redundant; replace by the trace condition
        for (int i = 0; i < d; ++i) t.emplace_back(0, i + i * d, gen.weight[i] * gen.weight[i]);
        SpMat A(d * d, d * d);
        A.setFromTriplets(t.begin(), t.end());
        A.makeCompressed();
        Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw NumericalError("steady state: singular generator");
        CVec rhs = CVec::Zero(d * d);
        rhs(0) = 1.0;
        const CVec v = lu.solve(rhs);
        if (lu.info() != Eigen::Success || !v.allFinite()) throw NumericalError("steady state solve failed");
        CMat r = Eigen::Map<const CMat>(v.data(), d, d);
        finish(gen, r, st);
        return st;
    }

    if (!(opt.dt > 0.0) || !(opt.t_steady > 0.0)) throw InvalidSpec("evolution needs dt, t_steady > 0");
    const double dt = opt.dt / gen.kappa;
    const long steps = static_cast<long>(std::ceil(opt.t_steady / opt.dt));
    CMat r = CMat::Zero(d, d);
    r(0, 0) = 1.0;
    for (long s = 0; s < steps; ++s) {
        const CMat k1 = gen.apply(r);
        const CMat k2 = gen.apply(r + 0.5 * dt * k1);
        const CMat k3 = gen.apply(r + 0.5 * dt * k2);
        const CMat k4 = gen.apply(r + dt * k3);
        r += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    finish(gen, r, st);
    if (st.residual > kEvolveResidualTol) {
        std::ostringstream os;
        os << "time evolution not converged: residual " << st.residual;
        throw NumericalError(os.str());
    }
    return st;
}

double output_moment(const SteadyState& state, int n)
{
    if (n < 1) throw InvalidSpec("moment order must be >= 1");
    const Generator& g = *state.gen;
    SpMat B = g.output;
    for (int i = 1; i < n; ++i) B = SpMat(B * g.output);
    const CMat X = B * (B * state.rho_graded.adjoint()).adjoint();
    double G = 0.0;
    for (int i = 0; i < g.dim(); ++i) G += g.weight[i] * g.weight[i] * X(i, i).real();
    return G;
}

double me_correlation(const SteadyState& state, const SystemSpec& spec, const DriveFrame&, int n)
{
    if (n < 1 || n > 3) throw InvalidSpec("correlation order must be 1, 2 or 3");
    if (spec.n_cells != state.gen->space->n_cells) throw InvalidSpec("state does not match spec");
    const double g1 = output_moment(state, 1);
    if (!(std::abs(g1) >= 1e-300)) throw NumericalError("vanishing output intensity");
    if (n == 1) return 1.0;
    return output_moment(state, n) / std::pow(g1, n);
}

StepInfo no_jump_step(const Generator& plain, const CVec& psi, double dt, CVec* next)
{
    StepInfo info;
    CVec p1 = psi - kI * dt * (plain.h * psi);
    info.keep_probability = p1.squaredNorm();
    for (const auto& L : plain.jumps) info.jump_rate += (L * psi).squaredNorm();
    if (next) *next = std::move(p1);
    return info;
}

TrajectoryResult trajectory_g2(const SystemSpec& spec, const DriveFrame& frame,
                               const TruncationSpec& trunc, const TrajectoryConfig& tconf, bool parallel)
{
    validate_trajectory_config(tconf);
    const Generator gen = build_liouvillian(spec, frame, trunc, false);
    const int d = gen.dim();
    const double dt = tconf.dt / gen.kappa;
    const long steps = static_cast<long>(std::llround(tconf.t_steady / tconf.dt));
    const SpMat b1 = gen.output;
    const SpMat b2 = SpMat(gen.output * gen.output);

    std::vector<double> num(tconf.n_traj), den(tconf.n_traj);
    std::vector<long> njumps(tconf.n_traj, 0);
    const std::size_t nj = gen.jumps.size();

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int tr = 0; tr < tconf.n_traj; ++tr) {
        Rng rng(tconf.seed, static_cast<std::uint64_t>(tr));
        CVec psi = CVec::Zero(d);
        psi(0) = 1.0;
        CVec p1(d);
        std::vector<CVec> lp(nj);
        std::vector<double> w(nj);
        for (long s = 0; s < steps; ++s) {
            p1.noalias() = psi;
            p1.noalias() -= (kI * dt) * (gen.h * psi);
            const double keep = p1.squaredNorm();
            if (rng.uniform() < keep) {
                psi = p1 / std::sqrt(keep);
                continue;
            }
            double tot = 0.0;
            for (std::size_t m = 0; m < nj; ++m) {
                lp[m] = gen.jumps[m] * psi;
                w[m] = lp[m].squaredNorm();
                tot += w[m];
            }
            if (!(tot > 0.0)) {
                psi = p1 / std::sqrt(keep);
                continue;
            }
            double u = rng.uniform() * tot;
            std::size_t m = 0;
            while (m + 1 < nj && u >= w[m]) u -= w[m++];
            psi = lp[m] / std::sqrt(w[m]);
            ++njumps[tr];
        }
        num[tr] = (b2 * psi).squaredNorm();
        den[tr] = (b1 * psi).squaredNorm();
    }

    TrajectoryResult res;
    const int n = tconf.n_traj;
    double sn = 0.0, sd = 0.0;
    for (int i = 0; i < n; ++i) {
        sn += num[i];
        sd += den[i];
        res.jumps += njumps[i];
    }
    res.mean_numerator = sn / n;
    res.mean_denominator = sd / n;
    if (!(res.mean_denominator > 0.0)) throw NumericalError("all trajectories have zero output intensity");
    res.estimate = res.mean_numerator / (res.mean_denominator * res.mean_denominator);

    Rng brng(tconf.seed, 0xb0075747ULL << 20);
    std::vector<double> est;
    est.reserve(tconf.n_bootstrap);
    for (int b = 0; b < tconf.n_bootstrap; ++b) {
        double a = 0.0, c = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::size_t j = brng.below(static_cast<std::size_t>(n));
            a += num[j];
            c += den[j];
        }
        if (c > 0.0) est.push_back((a / n) / ((c / n) * (c / n)));
    }
    double m = 0.0;
    for (double e : est) m += e;
    m /= static_cast<double>(est.size());
    double v = 0.0;
    for (double e : est) v += (e - m) * (e - m);
    res.std_error = est.size() > 1 ? std::sqrt(v / static_cast<double>(est.size() - 1)) : 0.0;
    return res;
}

}  // namespace chiralpb
