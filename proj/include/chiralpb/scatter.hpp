#pragma once

#include "chiralpb/core_model.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

namespace chiralpb {

// LU of -i(H - omega) with a conditioning check. A singular K is still usable when the
// right-hand side has no weight on its kernel (dark states of symmetric mirror arrays);
// those solves go through a rank-revealing decomposition and are checked by residual.
class Resolvent {
public:
    Resolvent(const CMat& h, double total_freq);
    CVec solve(const CVec& rhs) const;
    double rcond() const { return rcond_; }
    bool singular() const { return singular_; }

private:
    CMat k_;
    Eigen::PartialPivLU<CMat> lu_;
    Eigen::CompleteOrthogonalDecomposition<CMat> cod_;
    double rcond_ = 0.0;
    bool singular_ = false;
};

inline constexpr double kSingularRcond = 1e-14;
inline constexpr double kKernelResidual = 1e-9;

CVec k_solve(const OperatorBlock& h_block, double total_freq, const CVec& rhs);

struct AmplitudeSet {
    double detuning = 0.0;
    int max_n = 0;
    cplx p_single, p_double, p_triple;
    cplx total_1, total_2, total_3;
    cplx left_single;  // O^l K^-1(1) O^r dag
};

// Chain up to max_n photons (1..3); higher entries stay zero.
AmplitudeSet amplitudes(const SystemSpec& spec, const DriveFrame& frame, int max_n = 3);

cplx photon_amplitude(const SystemSpec& spec, const DriveFrame& frame, int n);
cplx total_amplitude(const SystemSpec& spec, const DriveFrame& frame, int n);
double correlation(const SystemSpec& spec, const DriveFrame& frame, int n);

struct TransRefl {
    double T = 0.0, R = 0.0, survival = 0.0;
};
TransRefl transmission_reflection(const SystemSpec& spec, const DriveFrame& frame);
// Direct-coupled cells: T = (kappa_l/kappa_r)|P1|^2, R = |1 + P1|^2 (flux-balanced for a single cell).
TransRefl transmission_reflection(const SystemSpec& spec, const AmplitudeSet& a);

enum class PhaseLabel { OnePB, TwoPB, PIT, None };
std::string to_string(PhaseLabel l);
PhaseLabel classify(double g2, double g3, double one_pb_threshold = 0.01);

struct ScatterResult {
    double g2 = 0.0, g3 = 0.0;
    double T = 0.0, R = 0.0, survival = 0.0;
    double arg_p2 = 0.0;
    PhaseLabel label = PhaseLabel::None;
    AmplitudeSet amps;
};

inline constexpr double kVanishingP1 = 1e-14;

// g3 and the label need max_n = 3; with max_n = 2 g3 is NaN and the label uses g2 only.
ScatterResult evaluate(const SystemSpec& spec, const DriveFrame& frame, int max_n = 3);
ScatterResult result_from(const SystemSpec& spec, const AmplitudeSet& a);

}  // namespace chiralpb
