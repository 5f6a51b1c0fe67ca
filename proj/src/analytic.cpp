#include "chiralpb/analytic.hpp"

#include <cmath>

namespace chiralpb {

namespace {

void require_mirror_uniform(const SystemSpec& spec)
{
    const double r = std::remainder(spec.hop_phase, 2.0 * kPi);
    if (std::abs(r) > 1e-12) throw InvalidSpec("closed form needs a mirror configuration");
    if (!spec.clean()) throw InvalidSpec("closed form needs a disorder-free spec");
    if (spec.bare_atoms()) throw InvalidSpec("closed form covers cavity-atom cells only");
}

// log(1 + x) for complex x, accurate when |x| is small
cplx log1p_c(cplx x)
{
    const double re = 0.5 * std::log1p(2.0 * x.real() + std::norm(x));
    return {re, std::atan2(x.imag(), 1.0 + x.real())};
}

// e^{u + iv} - 1 without cancellation
cplx expm1_c(cplx z)
{
    const double em = std::expm1(z.real());
    const double s = std::sin(0.5 * z.imag());
    return {em * std::cos(z.imag()) - 2.0 * s * s, (em + 1.0) * std::sin(z.imag())};
}

}  // namespace

ClosedFormResult p1_closed(const SystemSpec& spec, const DriveFrame& frame)
{
    require_mirror_uniform(spec);
    const int N = spec.n_cells;
    const double k = spec.kappa();
    const double a = spec.alpha();
    const double g = spec.coupling_g;
    const double d = frame.detuning;
    const bool lossless = spec.atom_loss == 0.0 && spec.cavity_loss == 0.0;

    if (lossless && spec.cavity_freq == spec.atom_freq && a != 1.0) {
        const double theta = 2.0 * std::atan2(d * (1.0 - a) * k, 2.0 * (1.0 + a) * (d * d - g * g));
        const cplx w = std::polar(1.0, N * theta);
        return {-(1.0 - w) / (1.0 - a * w), Formula::Eq6};
    }

    const cplx dc = frame.derived_lossy_cavity;
    const cplx de = frame.derived_lossy_atom;
    const cplx q = dc * de - g * g;
    const cplx s = kI * std::abs(spec.kappa_r - spec.kappa_l);
    if (s == cplx(0.0)) {
        // kappa_l = kappa_r: limit of the general form as the root vanishes
        const cplx v = 2.0 * kI * double(N) * spec.kappa_r * de / (2.0 * q + kI * k * de * (1.0 - N));
        return {v, Formula::EqS54};
    }
    const cplx den = 2.0 * q + de * (kI * k - s);
    if (den == cplx(0.0)) throw NumericalError("closed form: degenerate ratio");
    const cplx delta = 2.0 * de * s / den;  // r e^{i theta} - 1
    const cplx wm1 = expm1_c(double(N) * log1p_c(delta));
    const cplx v = 2.0 * kI * spec.kappa_r * wm1 / (s * (wm1 + 2.0) - kI * k * wm1);
    return {v, Formula::EqS54};
}

ClosedFormResult p1_recursive(const SystemSpec& spec, const DriveFrame& frame)
{
    require_mirror_uniform(spec);
    const double k = spec.kappa();
    const double g = spec.coupling_g;
    const cplx xi1 = spec.kappa_l * spec.kappa_r;
    const cplx dc = frame.derived_lossy_cavity;
    const cplx de = frame.derived_lossy_atom;
    const cplx q = dc * de - g * g;
    cplx y = 0.0;
    for (int j = 0; j < spec.n_cells; ++j) {
        const cplx den = q + xi1 * de * y;
        if (std::abs(den) < 1e-300) throw NumericalError("recursion denominator vanished");
        y += de * (1.0 - xi1 * y * y + kI * k * y) / den;
    }
    return {kI * spec.kappa_r * y, Formula::EqS53Recursion};
}

std::pair<cplx, cplx> single_cavity_p2_p3(const DriveFrame& frame, double g, double kappa,
                                          double alpha)
{
    const double d = frame.detuning;
    const cplx dc(d, -0.5 * kappa);
    const double kr = kappa / (1.0 + alpha);
    const double g2 = g * g;
    cplx den[3];
    for (int n = 0; n < 3; ++n) den[n] = double(n) * dc * dc + d * dc - g2;

    const cplx p2 = -kr * kr * (g2 + d * dc + d * d) / (den[0] * den[1]);
    const cplx num3 = d * (dc + d) * (2.0 * dc + d) + (4.0 * dc + 3.0 * d) * g2;
    const cplx p3 = -kI * kr * kr * kr * num3 / (den[0] * den[1] * den[2]);
    return {p2, p3};
}

double pb_curve_single(double alpha)
{
    if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidSpec("curve defined for 0 <= alpha < 1");
    return std::sqrt((1.0 - alpha) * (3.0 + alpha)) / (2.0 * (1.0 + alpha));
}

double pb_curve_single_alpha(double g_over_kappa)
{
    const double a = 2.0 / std::sqrt(4.0 * g_over_kappa * g_over_kappa + 1.0) - 1.0;
    if (!(g_over_kappa > 0.0) || a < 0.0)
        throw InvalidSpec("no chirality on the curve for this g/kappa (needs 0 < g/kappa <= sqrt(3)/2)");
    return a;
}

OddResonant odd_resonant(double alpha, double g, double kappa)
{
    const double gk2 = (g / kappa) * (g / kappa);
    const double a = alpha;
    const double om = (1.0 - a) * (1.0 - a);
    const double op = (1.0 + a) * (1.0 + a);
    OddResonant r;
    r.p2 = -4.0 * om / (1.0 + a * a) / (4.0 * gk2 * op + om);
    const double num = 4.0 * gk2 * op * (1.0 + a * a) - om * (3.0 - a * a);
    const double den = 4.0 * gk2 * op * (1.0 + a * a) + om * (1.0 + a * a);
    r.g2 = (num / den) * (num / den);
    r.curve_g_over_kappa = std::abs(1.0 - a) / (2.0 * (1.0 + a)) * std::sqrt((3.0 - a * a) / (1.0 + a * a));
    return r;
}

double survival_limit(double alpha)
{
    if (!(alpha >= 0.0)) throw InvalidSpec("alpha must be >= 0");
    if (alpha <= 1.0) return alpha;
    return 1.0 - 1.0 / alpha + 1.0 / (alpha * alpha);
}

cplx dcc_p1_resonant(double g, double kappa, double alpha, double gamma_e)
{
    const double kr_k = 1.0 / (1.0 + alpha);
    const double gk = g / kappa;
    const double ge = gamma_e / kappa;
    return kr_k * (-2.0 * ge) / (4.0 * gk * gk + ge);
}

}  // namespace chiralpb
