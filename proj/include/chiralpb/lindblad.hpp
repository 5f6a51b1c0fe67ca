#pragma once

#include "chiralpb/core_model.hpp"

#include <Eigen/Sparse>

namespace chiralpb {

using SpMat = Eigen::SparseMatrix<cplx>;

struct TruncationSpec {
    int photons_per_cavity = 3;
};

struct TrajectoryConfig {
    double dt = 1e-2;       // units of 1/kappa
    double t_steady = 1e3;  // units of 1/kappa
    int n_traj = 100;
    std::uint64_t seed = 0;
    int n_bootstrap = 200;
};
void validate_trajectory_config(const TrajectoryConfig& c);

inline constexpr std::size_t kHilbertCap = 4096;
inline constexpr std::size_t kNullSpaceCap = 10000;  // vectorized dimension

// Product space (c_1, s_1, ..., c_N, s_N) with c_j <= cutoff; atoms only for bare arrays.
struct FockSpace {
    int n_cells = 0;
    int cutoff = 0;
    bool atoms_only = false;
    int dim = 0;
    std::vector<int> excitations;  // total excitation number per basis state
    std::vector<SpMat> mode;       // waveguide-coupled lowering operator per cell
    std::vector<SpMat> atom;       // sigma_j
};

std::shared_ptr<const FockSpace> make_fock_space(const SystemSpec& spec, const TruncationSpec& trunc,
                                                 std::size_t cap = kHilbertCap);

// Generator rho' = -i(H rho - rho H^dag) + sum_k L_k rho L_k^dag, with H the driven effective
// Hamiltonian in the frame rotating at the drive frequency. Operators are stored in the graded
// basis X -> S^-1 X S, S = diag(scale^n), so that weak-drive states have O(1) entries.
struct Generator {
    std::shared_ptr<const FockSpace> space;
    double scale = 1.0;
    double kappa = 1.0;
    Eigen::VectorXd weight;  // scale^{n_k}
    SpMat h;
    std::vector<SpMat> jumps;
    SpMat output;  // graded b_r

    int dim() const { return space->dim; }
    CMat apply(const CMat& rho_graded) const;
    CMat apply_physical(const CMat& rho) const;
    CMat to_graded(const CMat& rho) const;
    CMat to_physical(const CMat& rho_graded) const;
    double weighted_trace(const CMat& rho_graded) const;
    SpMat superoperator() const;  // column-major vec
};

// graded = false gives the plain operators (scale 1).
Generator build_liouvillian(const SystemSpec& spec, const DriveFrame& frame,
                            const TruncationSpec& trunc, bool graded = true,
                            std::size_t cap = kHilbertCap);

enum class SteadyMethod { NullSpace, TimeEvolve };

struct EvolveOptions {
    double dt = 1e-2;       // units of 1/kappa
    double t_steady = 200;  // units of 1/kappa
};

struct SteadyState {
    std::shared_ptr<const Generator> gen;
    CMat rho_graded;
    double residual = 0.0;

    CMat rho() const { return gen->to_physical(rho_graded); }
};

inline constexpr double kEvolveResidualTol = 1e-7;

SteadyState steady_state(const Generator& gen, SteadyMethod method, const EvolveOptions& opt = {});

// Tr[b^dag^n b^n rho]
double output_moment(const SteadyState& state, int n);
double me_correlation(const SteadyState& state, const SystemSpec& spec, const DriveFrame& frame, int n);

struct TrajectoryResult {
    double estimate = 0.0;
    double std_error = 0.0;
    double mean_numerator = 0.0;
    double mean_denominator = 0.0;
    long jumps = 0;
};

struct StepInfo {
    double keep_probability = 1.0;  // ||(1 - i H dt) psi||^2
    double jump_rate = 0.0;         // <psi| sum L^dag L |psi>
};
StepInfo no_jump_step(const Generator& plain, const CVec& psi, double dt, CVec* next = nullptr);

TrajectoryResult trajectory_g2(const SystemSpec& spec, const DriveFrame& frame,
                               const TruncationSpec& trunc, const TrajectoryConfig& tconf,
                               bool parallel = true);

}  // namespace chiralpb
