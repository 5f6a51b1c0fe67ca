#include "chiralpb/scatter.hpp"

#include <cmath>
#include <limits>

namespace chiralpb {

Resolvent::Resolvent(const CMat& h, double total_freq)
{
    CMat k = h;
    k.diagonal().array() -= total_freq;
    k *= -kI;
    if (k.size() == 0) return;
    lu_.compute(k);
    rcond_ = lu_.rcond();
    if (!std::isfinite(rcond_)) throw NumericalError("resolvent singular");
    if (rcond_ > kSingularRcond) return;
    singular_ = true;
    k_ = std::move(k);
    cod_.setThreshold(1e-10);
    cod_.compute(k_);
}

CVec Resolvent::solve(const CVec& rhs) const
{
    if (rhs.size() == 0) return rhs;
    if (!singular_) return lu_.solve(rhs);
    CVec x = cod_.solve(rhs);
    const double scale = std::max(rhs.norm(), k_.norm() * x.norm());
    if (!x.allFinite() || (k_ * x - rhs).norm() > kKernelResidual * scale) throw NumericalError("resolvent singular");
    return x;
}

CVec k_solve(const OperatorBlock& h_block, double total_freq, const CVec& rhs)
{
    if (rhs.size() != h_block.entries.rows()) throw InvalidSpec("k_solve: rhs length mismatch");
    return Resolvent(h_block.entries, total_freq).solve(rhs);
}

AmplitudeSet amplitudes(const SystemSpec& spec, const DriveFrame& frame, int max_n)
{
    if (max_n < 1 || max_n > 3) throw InvalidSpec("photon number must be 1, 2 or 3");
    AmplitudeSet a;
    a.detuning = frame.detuning;
    a.max_n = max_n;
    const double wd = frame.drive_freq;

    // O_{n-1,n} blocks (Right); each stage: x_n = K^-1(n) O_{n-1,n}^dag x_{n-1}
    const CMat o1 = build_collapse(spec, 1, Direction::Right).entries;
    const CMat o1l = build_collapse(spec, 1, Direction::Left).entries;
    const CVec x1 = Resolvent(build_h_eff(spec, 1).entries, wd).solve(o1.adjoint().col(0));
    a.p_single = (o1 * x1)(0);
    a.left_single = (o1l * x1)(0);

    if (max_n >= 2) {
        const CMat o2 = build_collapse(spec, 2, Direction::Right).entries;
        const CVec x2 = Resolvent(build_h_eff(spec, 2).entries, 2.0 * wd).solve(o2.adjoint() * x1);
        a.p_double = (o1 * (o2 * x2))(0);
        if (max_n >= 3) {
            const CMat o3 = build_collapse(spec, 3, Direction::Right).entries;
            const CVec x3 =
                Resolvent(build_h_eff(spec, 3).entries, 3.0 * wd).solve(o3.adjoint() * x2);
            a.p_triple = (o1 * (o2 * (o3 * x3)))(0);
        }
    }

    if (spec.kind == Kind::DirectCoupledCavityAtom) {
        a.total_1 = a.p_single;
        a.total_2 = a.p_double;
        a.total_3 = a.p_triple;
    } else {
        a.total_1 = 1.0 + a.p_single;
        if (max_n >= 2) a.total_2 = 1.0 + 2.0 * a.p_single + a.p_double;
        if (max_n >= 3) a.total_3 = 1.0 + 3.0 * a.p_single + 3.0 * a.p_double + a.p_triple;
    }
    return a;
}

cplx photon_amplitude(const SystemSpec& spec, const DriveFrame& frame, int n)
{
    const AmplitudeSet a = amplitudes(spec, frame, n);
    return n == 1 ? a.p_single : n == 2 ? a.p_double : a.p_triple;
}

cplx total_amplitude(const SystemSpec& spec, const DriveFrame& frame, int n)
{
    const AmplitudeSet a = amplitudes(spec, frame, n);
    return n == 1 ? a.total_1 : n == 2 ? a.total_2 : a.total_3;
}

static double corr_from(const AmplitudeSet& a, int n)
{
    const double p1 = std::norm(a.total_1);
    if (std::sqrt(p1) < kVanishingP1) throw NumericalError("vanishing single-photon channel");
    const cplx pn = n == 2 ? a.total_2 : a.total_3;
    return std::norm(pn) / std::pow(p1, n);
}

double correlation(const SystemSpec& spec, const DriveFrame& frame, int n)
{
    if (n != 2 && n != 3) throw InvalidSpec("correlation order must be 2 or 3");
    return corr_from(amplitudes(spec, frame, n), n);
}

TransRefl transmission_reflection(const SystemSpec& spec, const AmplitudeSet& a)
{
    TransRefl t;
    if (spec.kind == Kind::DirectCoupledCavityAtom) {
        // in through the kappa_r mirror, out through kappa_l; the input mirror reflects 1 + P1
        t.T = spec.kappa_l / spec.kappa_r * std::norm(a.p_single);
        t.R = std::norm(1.0 + a.p_single);
    } else {
        t.T = std::norm(1.0 + a.p_single);
        t.R = std::norm(a.left_single);
    }
    t.survival = t.T + t.R;
    return t;
}

TransRefl transmission_reflection(const SystemSpec& spec, const DriveFrame& frame)
{
    return transmission_reflection(spec, amplitudes(spec, frame, 1));
}

std::string to_string(PhaseLabel l)
{
    switch (l) {
    case PhaseLabel::OnePB: return "1PB";
    case PhaseLabel::TwoPB: return "2PB";
    case PhaseLabel::PIT: return "PIT";
    case PhaseLabel::None: return "None";
    }
    return "?";
}

PhaseLabel classify(double g2, double g3, double one_pb_threshold)
{
    if (g2 < one_pb_threshold) return PhaseLabel::OnePB;
    if (g3 < 1.0 && g2 >= 1.0) return PhaseLabel::TwoPB;
    if (g2 > 1.0 && g3 > 1.0) return PhaseLabel::PIT;
    return PhaseLabel::None;
}

ScatterResult result_from(const SystemSpec& spec, const AmplitudeSet& a)
{
    ScatterResult r;
    r.amps = a;
    const TransRefl t = transmission_reflection(spec, a);
    r.T = t.T;
    r.R = t.R;
    r.survival = t.survival;
    r.g2 = corr_from(a, 2);
    r.g3 = a.max_n >= 3 ? corr_from(a, 3) : std::numeric_limits<double>::quiet_NaN();
    r.arg_p2 = std::arg(a.total_2);
    if (r.arg_p2 == -kPi) r.arg_p2 = kPi;
    if (a.max_n >= 3)
        r.label = classify(r.g2, r.g3);
    else
        r.label = r.g2 < 0.01 ? PhaseLabel::OnePB : PhaseLabel::None;
    return r;
}

ScatterResult evaluate(const SystemSpec& spec, const DriveFrame& frame, int max_n)
{
    if (max_n < 2) throw InvalidSpec("evaluate needs max_n >= 2");
    return result_from(spec, amplitudes(spec, frame, max_n));
}

}  // namespace chiralpb
