#pragma once

#include "chiralpb/core_model.hpp"
#include "chiralpb/scatter.hpp"

#include "json.hpp"

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace chiralpb {

struct Axis {
    double min = 0.0, max = 1.0;
    int count = 2;
    double at(int i) const;
};

// Campaign grid in units of kappa: kappa = 1, kappa_r = 1/(1+alpha), kappa_l = alpha/(1+alpha).
struct SweepGrid {
    Axis detuning{-1.0, 1.0, 41};
    Axis alpha{0.0, 1.0, 41};
    double g = 0.8;
    int n_cells = 1;
    double hop_phase = 2.0 * kPi;
    double atom_loss = 0.0;
    double cavity_loss = 0.0;
    double atom_offset = 0.0;  // omega_e - omega_c
    Kind kind = Kind::SideCoupledCavityAtom;

    int L() const { return detuning.count; }  // per-axis sampling count
    std::size_t size() const { return std::size_t(detuning.count) * std::size_t(alpha.count); }
};

void validate_grid(const SweepGrid& g);
SystemSpec spec_at(const SweepGrid& g, double alpha);

enum Quantity : unsigned {
    QG2 = 1u, QG3 = 2u, QT = 4u, QR = 8u, QArg = 16u, QLabel = 32u,
    QAll = 63u
};

struct Row {
    double delta_over_kappa = 0.0;
    double alpha = 0.0;
    double g2 = std::numeric_limits<double>::quiet_NaN();
    double g3 = std::numeric_limits<double>::quiet_NaN();
    double T = std::numeric_limits<double>::quiet_NaN();
    double R = std::numeric_limits<double>::quiet_NaN();
    double arg_p2 = std::numeric_limits<double>::quiet_NaN();
    std::string label;
    std::string err;
};

using Table = std::vector<Row>;

// Detuning-major row order. Disorder lists (if any) are applied at every point.
Table sweep(const SweepGrid& grid, unsigned quantities = QAll,
            const std::vector<double>& cavity_disorder = {}, const std::vector<double>& atom_disorder = {});
// Single-threaded reference path (same rows, bit-identical).
Table sweep_serial(const SweepGrid& grid, unsigned quantities = QAll,
                   const std::vector<double>& cavity_disorder = {},
                   const std::vector<double>& atom_disorder = {});

struct ZeroPoint {
    double delta = 0.0;
    double alpha = 0.0;
    double residual = 0.0;
    int winding = 0;
    double g2 = 0.0;
    int iterations = 0;
};

struct ZeroSearch {
    std::vector<ZeroPoint> zeros;        // converged, deduplicated, sorted by (alpha, delta)
    std::vector<ZeroPoint> unconverged;  // flagged plaquettes whose refinement failed
    int flagged = 0;
    int net_flagged_winding = 0;
};

// (Re p2, Im p2) at one point of the campaign parameterization
cplx total_p2_at(const SweepGrid& g, double delta, double alpha);

ZeroSearch find_zeros(const SweepGrid& region);
int boundary_winding(const SweepGrid& region);

struct AlphaOpt {
    double alpha_opt = 0.0;
    double delta_opt = 0.0;  // |Delta| of that zero
    int levels = 0;
    std::vector<ZeroPoint> zeros;
};
AlphaOpt alpha_opt(const SweepGrid& region);
int count_alpha_levels(const std::vector<ZeroPoint>& zeros, double tol = 1e-4);

struct EnsembleRow {
    double delta_over_kappa = 0.0;
    double alpha = 0.0;
    double geo_mean = std::numeric_limits<double>::quiet_NaN();
    double arith_mean = std::numeric_limits<double>::quiet_NaN();
    double min = std::numeric_limits<double>::quiet_NaN();
    int count = 0;
};

std::uint64_t instance_seed(std::uint64_t seed, int instance);

std::vector<EnsembleRow> disorder_ensemble(const SweepGrid& grid, double W, int n_instances,
                                           std::uint64_t seed, bool parallel = true);

enum class FitForm { AlphaOptForm, DeltaOptForm, PowerLaw, LogLinear };
std::string to_string(FitForm f);
FitForm fit_form_from_string(const std::string& s);
int fit_param_count(FitForm f);
std::vector<double> default_initial_guess(FitForm f);
double fit_model(FitForm f, const std::vector<double>& p, double N);

struct FitResult {
    FitForm form = FitForm::LogLinear;
    std::vector<double> params;
    double sse = 0.0;
    double r2 = 0.0;
    int iterations = 0;
};

// LogLinear fits log(value) = p0 + p1 N and reports R^2 in log space.
FitResult fit_scaling(const std::vector<std::pair<double, double>>& points, FitForm form,
                      std::vector<double> initial_guess = {});

// CSV with header delta_over_kappa,alpha,g2,g3,T,R,arg_p2,label,err at 17 significant digits.
void write_table_csv(std::ostream& os, const Table& t);
void write_ensemble_csv(std::ostream& os, const std::vector<EnsembleRow>& t);
std::string format_double(double v);

nlohmann::json grid_to_json(const SweepGrid& g);
SweepGrid grid_from_json(const nlohmann::json& j);

}  // namespace chiralpb
