#pragma once

#include "chiralpb/core_model.hpp"

#include <utility>

namespace chiralpb {

enum class Formula { Eq6, EqS54, EqS53Recursion, Eq7, Eq8, Eq9, Eq10, EqS44, EqS45, EqS78, EqS53DCC };

struct ClosedFormResult {
    cplx value;
    Formula formula_id;
};

// Mirror configuration and uniform spec only. Lossless with omega_c = omega_e uses
// the theta form; everything else the general modulus/argument form.
ClosedFormResult p1_closed(const SystemSpec& spec, const DriveFrame& frame);
ClosedFormResult p1_recursive(const SystemSpec& spec, const DriveFrame& frame);

// Single cavity, resonant atom, lossless.
std::pair<cplx, cplx> single_cavity_p2_p3(const DriveFrame& frame, double g, double kappa,
                                          double alpha);

double pb_curve_single(double alpha);
// alpha on the single-cavity curve for a given g/kappa (inverse of pb_curve_single)
double pb_curve_single_alpha(double g_over_kappa);

struct OddResonant {
    cplx p2;
    double g2;
    double curve_g_over_kappa;
};
OddResonant odd_resonant(double alpha, double g, double kappa);

double survival_limit(double alpha);

// Direct-coupled single cell at resonance with atom loss.
cplx dcc_p1_resonant(double g, double kappa, double alpha, double gamma_e);

}  // namespace chiralpb
