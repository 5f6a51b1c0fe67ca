#include "chiralpb/core_model.hpp"

#include "chiralpb/rng.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <tuple>

namespace chiralpb {

std::string to_string(Kind k)
{
    switch (k) {
    case Kind::SideCoupledCavityAtom: return "SideCoupledCavityAtom";
    case Kind::DirectCoupledCavityAtom: return "DirectCoupledCavityAtom";
    case Kind::SideCoupledBareAtom: return "SideCoupledBareAtom";
    }
    return "?";
}

Kind kind_from_string(const std::string& s)
{
    if (s == "SideCoupledCavityAtom" || s == "scc") return Kind::SideCoupledCavityAtom;
    if (s == "DirectCoupledCavityAtom" || s == "dcc") return Kind::DirectCoupledCavityAtom;
    if (s == "SideCoupledBareAtom" || s == "bare") return Kind::SideCoupledBareAtom;
    throw InvalidSpec("unknown kind '" + s + "'");
}

bool SystemSpec::clean() const
{
    for (double e : cavity_detune_disorder)
        if (e != 0.0) return false;
    for (double e : atom_detune_disorder)
        if (e != 0.0) return false;
    return true;
}

SystemSpec validate_spec(SystemSpec spec)
{
    if (spec.n_cells < 1) throw InvalidSpec("n_cells must be >= 1");
    if (!(spec.kappa_r > 0.0)) throw InvalidSpec("zero right-decay: kappa_r must be > 0");
    if (!(spec.kappa_l >= 0.0)) throw InvalidSpec("kappa_l must be >= 0");
    if (!(spec.atom_loss >= 0.0)) throw InvalidSpec("atom_loss must be >= 0");
    if (!(spec.cavity_loss >= 0.0)) throw InvalidSpec("cavity_loss must be >= 0");
    if (!(spec.coupling_g >= 0.0)) throw InvalidSpec("coupling_g must be >= 0");
    for (double v : {spec.cavity_freq, spec.atom_freq, spec.coupling_g, spec.kappa_l, spec.hop_phase,
                     spec.atom_loss, spec.cavity_loss})
        if (!std::isfinite(v)) throw InvalidSpec("non-finite parameter");

    const auto n = static_cast<std::size_t>(spec.n_cells);
    if (spec.cavity_detune_disorder.empty()) spec.cavity_detune_disorder.assign(n, 0.0);
    if (spec.atom_detune_disorder.empty()) spec.atom_detune_disorder.assign(n, 0.0);
    if (spec.cavity_detune_disorder.size() != n || spec.atom_detune_disorder.size() != n)
        throw InvalidSpec("disorder list length must equal n_cells");
    for (double e : spec.cavity_detune_disorder)
        if (!std::isfinite(e)) throw InvalidSpec("non-finite disorder entry");
    for (double e : spec.atom_detune_disorder)
        if (!std::isfinite(e)) throw InvalidSpec("non-finite disorder entry");
    return spec;
}

SystemSpec sample_disorder(const SystemSpec& spec, double strength_W, std::uint64_t seed)
{
    if (!(strength_W >= 0.0)) throw InvalidSpec("disorder strength must be >= 0");
    SystemSpec out = validate_spec(spec);
    const double k = out.kappa();
    if (strength_W == 0.0) {
        std::fill(out.cavity_detune_disorder.begin(), out.cavity_detune_disorder.end(), 0.0);
        std::fill(out.atom_detune_disorder.begin(), out.atom_detune_disorder.end(), 0.0);
        return out;
    }
    Rng rng(seed, 0);
    for (auto& e : out.cavity_detune_disorder) e = k * rng.uniform(-strength_W, strength_W);
    for (auto& e : out.atom_detune_disorder) e = k * rng.uniform(-strength_W, strength_W);
    return out;
}

DriveFrame make_frame(const SystemSpec& spec, double drive_freq, double drive_amp)
{
    if (!(drive_amp >= 0.0)) throw InvalidSpec("drive amplitude must be >= 0");
    DriveFrame f;
    f.drive_freq = drive_freq;
    f.detuning = spec.cavity_freq - drive_freq;
    f.drive_amp = drive_amp;

    const double k = spec.kappa();
    const double g = spec.coupling_g;
    const double d = f.detuning;
    f.derived_single = cplx(d, -0.5 * k);
    f.derived_lossy_cavity = cplx(d, -0.5 * (k + spec.cavity_loss));
    f.derived_lossy_atom = cplx(spec.atom_freq - drive_freq, -0.5 * spec.atom_loss);
    f.derived_xi1 = spec.kappa_l * spec.kappa_r;

    const cplx dc = f.derived_lossy_cavity;
    const cplx de = f.derived_lossy_atom;
    const cplx q = dc * de - g * g;
    if (de == cplx(0.0))
        f.derived_xi2 = cplx(std::numeric_limits<double>::infinity(), 0.0);
    else
        f.derived_xi2 = q / de;

    // ratio multiplied through by De so that De = 0 stays regular
    const cplx s = kI * std::abs(spec.kappa_r - spec.kappa_l);
    const cplx num = 2.0 * q + de * (kI * k + s);
    const cplx den = 2.0 * q + de * (kI * k - s);
    if (den != cplx(0.0)) {
        f.derived_ratio = num / den;
        f.derived_modulus = std::abs(num) / std::abs(den);
        f.derived_theta = std::arg(f.derived_ratio);
    } else {
        f.derived_ratio = cplx(std::numeric_limits<double>::infinity(), 0.0);
        f.derived_modulus = std::numeric_limits<double>::infinity();
        f.derived_theta = 0.0;
    }

    const double a = spec.alpha();
    const double gk = g / k;
    f.derived_zeta = (1.0 + a * a) * (4.0 * gk * gk * (1.0 + a) * (1.0 + a) + (1.0 - a) * (1.0 - a));
    return f;
}

DriveFrame frame_at_detuning(const SystemSpec& spec, double detuning, double drive_amp)
{
    DriveFrame f = make_frame(spec, spec.cavity_freq - detuning, drive_amp);
    f.detuning = detuning;  // exact, independent of rounding in the subtraction
    return f;
}

int ExcitationBasis::index(const std::vector<int>& occ) const
{
    auto it = index_of.find(occ);
    return it == index_of.end() ? -1 : it->second;
}

static double binom(int n, int k)
{
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r);
}

std::size_t subspace_dimension(int n_cells, bool atoms_only, int n)
{
    if (n < 0) return 0;
    if (atoms_only) return static_cast<std::size_t>(binom(n_cells, n));
    double total = 0.0;
    for (int k = 0; k <= std::min(n, n_cells); ++k)
        total += binom(n_cells, k) * binom(n - k + n_cells - 1, n_cells - 1);
    if (total > 1e15) return std::numeric_limits<std::size_t>::max();
    return static_cast<std::size_t>(total);
}

namespace {

void enumerate_rec(int pos, int remaining, bool atoms_only, std::vector<int>& cur,
                   std::vector<std::vector<int>>& out)
{
    const int len = static_cast<int>(cur.size());
    if (pos == len) {
        if (remaining == 0) out.push_back(cur);
        return;
    }
    const bool is_cavity = (pos % 2 == 0);
    int hi = is_cavity ? (atoms_only ? 0 : remaining) : std::min(1, remaining);
    // remaining capacity after this slot, for pruning
    int atoms_after = 0;
    bool cavity_after = false;
    for (int p = pos + 1; p < len; ++p) {
        if (p % 2 == 0)
            cavity_after = cavity_after || !atoms_only;
        else
            ++atoms_after;
    }
    for (int v = hi; v >= 0; --v) {
        const int rest = remaining - v;
        if (!cavity_after && rest > atoms_after) break;
        cur[pos] = v;
        enumerate_rec(pos + 1, rest, atoms_only, cur, out);
    }
    cur[pos] = 0;
}

struct Hop {
    int row, col, p, q;  // a_p^dag a_q, p != q
    double amp;
};

struct Exchange {
    int row, col;  // a_j^dag sigma_j (row has the photon)
    double amp;
};

struct Lower {
    int row, col, j;  // a_j from n to n-1
    double amp;
};

struct Structure {
    std::shared_ptr<const ExcitationBasis> basis;
    std::shared_ptr<const ExcitationBasis> lower_basis;  // n-1, may be null for n = 0
    std::vector<Hop> hops;
    std::vector<Exchange> exchanges;
    std::vector<Lower> lowers;
};

using Key = std::tuple<int, bool, int>;

std::mutex& cache_mutex()
{
    static std::mutex m;
    return m;
}

std::map<Key, std::shared_ptr<const ExcitationBasis>>& basis_cache()
{
    static std::map<Key, std::shared_ptr<const ExcitationBasis>> c;
    return c;
}

std::map<Key, std::shared_ptr<const Structure>>& structure_cache()
{
    static std::map<Key, std::shared_ptr<const Structure>> c;
    return c;
}

ExcitationBasis make_basis(int n_cells, bool atoms_only, int n)
{
    ExcitationBasis b;
    b.excitation_count = n;
    b.n_cells = n_cells;
    b.atoms_only = atoms_only;
    std::vector<int> cur(2 * static_cast<std::size_t>(n_cells), 0);
    enumerate_rec(0, n, atoms_only, cur, b.states);
    for (int i = 0; i < b.dim(); ++i) b.index_of.emplace(b.states[i], i);
    return b;
}

void check_cap(int n_cells, bool atoms_only, int n, std::size_t cap)
{
    if (subspace_dimension(n_cells, atoms_only, n) > cap)
        throw InvalidSpec("subspace too large (N=" + std::to_string(n_cells) +
                          ", n=" + std::to_string(n) + ")");
}

std::shared_ptr<const ExcitationBasis> cached_basis(int n_cells, bool atoms_only, int n)
{
    const Key key{n_cells, atoms_only, n};
    {
        std::lock_guard<std::mutex> lk(cache_mutex());
        auto it = basis_cache().find(key);
        if (it != basis_cache().end()) return it->second;
    }
    auto b = std::make_shared<const ExcitationBasis>(make_basis(n_cells, atoms_only, n));
    std::lock_guard<std::mutex> lk(cache_mutex());
    return basis_cache().emplace(key, b).first->second;
}

std::shared_ptr<const Structure> cached_structure(int n_cells, bool atoms_only, int n)
{
    const Key key{n_cells, atoms_only, n};
    {
        std::lock_guard<std::mutex> lk(cache_mutex());
        auto it = structure_cache().find(key);
        if (it != structure_cache().end()) return it->second;
    }
    auto st = std::make_shared<Structure>();
    st->basis = cached_basis(n_cells, atoms_only, n);
    const ExcitationBasis& B = *st->basis;
    // slot of the waveguide-coupled mode of cell j
    auto mode = [&](int j) { return atoms_only ? 2 * j + 1 : 2 * j; };

    for (int col = 0; col < B.dim(); ++col) {
        const auto& s = B.states[col];
        for (int q = 0; q < n_cells; ++q) {
            const int cq = s[mode(q)];
            if (cq == 0) continue;
            for (int p = 0; p < n_cells; ++p) {
                if (p == q) continue;
                auto t = s;
                t[mode(q)] -= 1;
                t[mode(p)] += 1;
                const int row = B.index(t);
                if (row < 0) continue;  // atom already excited
                st->hops.push_back({row, col, p, q, std::sqrt(double(cq) * double(t[mode(p)]))});
            }
        }
        if (!atoms_only) {
            for (int j = 0; j < n_cells; ++j) {
                if (s[2 * j + 1] == 1) {
                    auto t = s;
                    t[2 * j + 1] = 0;
                    t[2 * j] += 1;
                    st->exchanges.push_back({B.index(t), col, std::sqrt(double(t[2 * j]))});
                }
            }
        }
    }
    if (n > 0) {
        st->lower_basis = cached_basis(n_cells, atoms_only, n - 1);
        const ExcitationBasis& L = *st->lower_basis;
        for (int col = 0; col < B.dim(); ++col) {
            const auto& s = B.states[col];
            for (int j = 0; j < n_cells; ++j) {
                const int c = s[mode(j)];
                if (c == 0) continue;
                auto t = s;
                t[mode(j)] -= 1;
                st->lowers.push_back({L.index(t), col, j, std::sqrt(double(c))});
            }
        }
    }
    std::shared_ptr<const Structure> cst = st;
    std::lock_guard<std::mutex> lk(cache_mutex());
    return structure_cache().emplace(key, cst).first->second;
}

}  // namespace

ExcitationBasis enumerate_basis(const SystemSpec& spec, int n, std::size_t cap)
{
    if (n < 0) throw InvalidSpec("excitation count must be >= 0");
    check_cap(spec.n_cells, spec.bare_atoms(), n, cap);
    return make_basis(spec.n_cells, spec.bare_atoms(), n);
}

std::shared_ptr<const ExcitationBasis> shared_basis(const SystemSpec& spec, int n, std::size_t cap)
{
    if (n < 0) throw InvalidSpec("excitation count must be >= 0");
    check_cap(spec.n_cells, spec.bare_atoms(), n, cap);
    return cached_basis(spec.n_cells, spec.bare_atoms(), n);
}

OperatorBlock build_h_eff(const SystemSpec& spec, int n, std::size_t cap)
{
    if (n < 1) throw InvalidSpec("build_h_eff needs n >= 1");
    check_cap(spec.n_cells, spec.bare_atoms(), n, cap);
    const auto st = cached_structure(spec.n_cells, spec.bare_atoms(), n);
    const ExcitationBasis& B = *st->basis;
    const bool bare = spec.bare_atoms();
    const double k = spec.kappa();
    const int N = spec.n_cells;

    const auto& ec = spec.cavity_detune_disorder;
    const auto& ee = spec.atom_detune_disorder;
    auto eps = [](const std::vector<double>& v, int j) {
        return v.empty() ? 0.0 : v[static_cast<std::size_t>(j)];
    };

    OperatorBlock out;
    out.rows_basis = st->basis;
    out.cols_basis = st->basis;
    CMat& H = out.entries;
    H.setZero(B.dim(), B.dim());

    for (int i = 0; i < B.dim(); ++i) {
        const auto& s = B.states[i];
        cplx d = 0.0;
        for (int j = 0; j < N; ++j) {
            if (bare) {
                d += double(s[2 * j + 1]) *
                     cplx(spec.atom_freq + eps(ee, j), -0.5 * (k + spec.atom_loss));
            } else {
                d += double(s[2 * j]) *
                     cplx(spec.cavity_freq + eps(ec, j), -0.5 * (k + spec.cavity_loss));
                d += double(s[2 * j + 1]) * cplx(spec.atom_freq + eps(ee, j), -0.5 * spec.atom_loss);
            }
        }
        H(i, i) = d;
    }
    for (const auto& x : st->exchanges) {
        H(x.row, x.col) += spec.coupling_g * x.amp;
        H(x.col, x.row) += spec.coupling_g * x.amp;
    }
    for (const auto& h : st->hops) {
        // -i e^{i phi (j-k)} (kappa_r a_j^dag a_k + kappa_l a_k^dag a_j), j > k
        const int dist = std::abs(h.p - h.q);
        const double rate = h.p > h.q ? spec.kappa_r : spec.kappa_l;
        H(h.row, h.col) += -kI * std::polar(1.0, spec.hop_phase * dist) * (rate * h.amp);
    }
    return out;
}

OperatorBlock build_collapse(const SystemSpec& spec, int n, Direction dir, std::size_t cap)
{
    if (n < 1) throw InvalidSpec("collapse block needs n >= 1");
    check_cap(spec.n_cells, spec.bare_atoms(), n, cap);
    const auto st = cached_structure(spec.n_cells, spec.bare_atoms(), n);
    const double rate = dir == Direction::Right ? spec.kappa_r : spec.kappa_l;
    const double sign = dir == Direction::Right ? -1.0 : 1.0;
    const double sq = std::sqrt(rate);

    OperatorBlock out;
    out.rows_basis = st->lower_basis;
    out.cols_basis = st->basis;
    out.entries.setZero(st->lower_basis->dim(), st->basis->dim());
    for (const auto& l : st->lowers)
        out.entries(l.row, l.col) += sq * std::polar(1.0, sign * spec.hop_phase * l.j) * l.amp;
    return out;
}

CMat local_loss_block(const SystemSpec& spec, int n, std::size_t cap)
{
    const auto B = shared_basis(spec, n, cap);
    CMat m = CMat::Zero(B->dim(), B->dim());
    for (int i = 0; i < B->dim(); ++i) {
        const auto& s = B->states[i];
        double v = 0.0;
        for (int j = 0; j < spec.n_cells; ++j) {
            v += spec.atom_loss * s[2 * j + 1];
            if (!spec.bare_atoms()) v += spec.cavity_loss * s[2 * j];
        }
        m(i, i) = v;
    }
    return m;
}

}  // namespace chiralpb
