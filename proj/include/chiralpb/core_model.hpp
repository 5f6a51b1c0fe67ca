#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace chiralpb {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

// Bad input: maps to CLI exit code 1.
struct InvalidSpec : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Singular solves, non-convergence, vanishing denominators: exit code 2.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Kind { SideCoupledCavityAtom, DirectCoupledCavityAtom, SideCoupledBareAtom };

std::string to_string(Kind k);
Kind kind_from_string(const std::string& s);

struct SystemSpec {
    int n_cells = 1;
    double cavity_freq = 0.0;
    double atom_freq = 0.0;
    double coupling_g = 0.0;
    double kappa_r = 1.0;
    double kappa_l = 0.0;
    double hop_phase = 2.0 * kPi;
    double atom_loss = 0.0;
    double cavity_loss = 0.0;
    Kind kind = Kind::SideCoupledCavityAtom;
    std::vector<double> cavity_detune_disorder;
    std::vector<double> atom_detune_disorder;

    double kappa() const { return kappa_l + kappa_r; }
    double alpha() const { return kappa_l / kappa_r; }
    double beta() const { return kappa() / (kappa() + cavity_loss); }
    bool bare_atoms() const { return kind == Kind::SideCoupledBareAtom; }
    bool clean() const;

    bool operator==(const SystemSpec&) const = default;
};

SystemSpec validate_spec(SystemSpec spec);

// Each eps_{c,j}/kappa and eps_{e,j}/kappa uniform on [-W, W]; cavity list drawn first.
SystemSpec sample_disorder(const SystemSpec& spec, double strength_W, std::uint64_t seed);

struct DriveFrame {
    double drive_freq = 0.0;
    double detuning = 0.0;  // omega_c - omega_d
    double drive_amp = 0.0;
    cplx derived_single;        // Delta - i kappa/2
    cplx derived_lossy_cavity;  // Delta - i (kappa + kappa_ext)/2
    cplx derived_lossy_atom;    // (omega_e - omega_d) - i gamma_e/2
    cplx derived_xi1;
    cplx derived_xi2;  // infinite when the lossy atom term vanishes
    double derived_theta = 0.0;
    double derived_modulus = 1.0;
    cplx derived_zeta;
    cplx derived_ratio;  // r e^{i theta}
};

DriveFrame make_frame(const SystemSpec& spec, double drive_freq, double drive_amp = 0.0);
// Frame from the cavity detuning Delta = omega_c - omega_d.
DriveFrame frame_at_detuning(const SystemSpec& spec, double detuning, double drive_amp = 0.0);

inline constexpr std::size_t kDefaultDimCap = 20000;

struct ExcitationBasis {
    int excitation_count = 0;
    int n_cells = 0;
    bool atoms_only = false;
    // (c1, s1, ..., cN, sN), descending lexicographic
    std::vector<std::vector<int>> states;
    std::map<std::vector<int>, int> index_of;

    int dim() const { return static_cast<int>(states.size()); }
    int index(const std::vector<int>& occ) const;
};

std::size_t subspace_dimension(int n_cells, bool atoms_only, int n);
ExcitationBasis enumerate_basis(const SystemSpec& spec, int n, std::size_t cap = kDefaultDimCap);

struct OperatorBlock {
    std::shared_ptr<const ExcitationBasis> rows_basis;
    std::shared_ptr<const ExcitationBasis> cols_basis;
    CMat entries;
};

enum class Direction { Right, Left };

// Cached per (N, bare?, n); safe to call from parallel workers.
std::shared_ptr<const ExcitationBasis> shared_basis(const SystemSpec& spec, int n,
                                                    std::size_t cap = kDefaultDimCap);

OperatorBlock build_h_eff(const SystemSpec& spec, int n, std::size_t cap = kDefaultDimCap);
OperatorBlock build_collapse(const SystemSpec& spec, int n, Direction dir,
                             std::size_t cap = kDefaultDimCap);
// gamma_e sum sigma^dag sigma + kappa_ext sum a^dag a on the n-excitation block
CMat local_loss_block(const SystemSpec& spec, int n, std::size_t cap = kDefaultDimCap);

}  // namespace chiralpb
