#include "doctest.h"

#include "chiralpb/lindblad.hpp"
#include "chiralpb/rng.hpp"
#include "chiralpb/scatter.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace chiralpb;

namespace {

SystemSpec cell_spec(int N, double g, double alpha, double gamma_e = 0.0)
{
    SystemSpec s;
    s.n_cells = N;
    s.coupling_g = g;
    s.kappa_r = 1.0 / (1.0 + alpha);
    s.kappa_l = alpha / (1.0 + alpha);
    s.atom_loss = gamma_e;
    return validate_spec(s);
}

CMat random_density(int d, Rng& r)
{
    CMat a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = cplx(r.uniform(-1, 1), r.uniform(-1, 1));
    CMat rho = a * a.adjoint();
    return rho / rho.trace();
}

double me_g2(const SystemSpec& s, double delta, double omega, SteadyMethod m, int photons = 3)
{
    const DriveFrame f = frame_at_detuning(s, delta, omega);
    return me_correlation(steady_state(build_liouvillian(s, f, {photons}), m), s, f, 2);
}

}  // namespace

TEST_CASE("fock space layout")
{
    const SystemSpec s = cell_spec(2, 0.8, 0.3);
    const auto F = make_fock_space(s, {3});
    CHECK(F->dim == 64);
    CHECK(F->mode.size() == 2);
    CHECK(F->excitations[0] == 0);
    SystemSpec b = s;
    b.kind = Kind::SideCoupledBareAtom;
    CHECK(make_fock_space(validate_spec(b), {3})->dim == 4);
    CHECK_THROWS_AS(make_fock_space(cell_spec(5, 0.8, 0.3), {3}), InvalidSpec);
}

TEST_CASE("generator preserves trace")
{
    Rng r(1, 0);
    for (int k = 0; k < 10; ++k) {
        SystemSpec s = cell_spec(1 + int(r.below(2)), r.uniform(0.1, 1.2), r.uniform(0, 1), r.uniform(0, 0.3));
        s.cavity_loss = r.uniform(0, 0.3);
        s.hop_phase = r.uniform(0, 2 * kPi);
        s.kind = static_cast<Kind>(r.below(3));
        s = validate_spec(s);
        const Generator G = build_liouvillian(s, frame_at_detuning(s, r.uniform(-1, 1), 0.05), {2}, false);
        const CMat rho = random_density(G.dim(), r);
        CHECK(std::abs(G.apply_physical(rho).trace()) < 1e-12);
        const Generator Gg = build_liouvillian(s, frame_at_detuning(s, 0.2, 0.05), {2}, true);
        CHECK(std::abs(Gg.apply_physical(rho).trace()) < 1e-12);
    }
}

TEST_CASE("single cell is the driven Jaynes-Cummings master equation")
{
    const SystemSpec s = cell_spec(1, 0.8, 0.4);
    const double delta = 0.3, om = 0.02;
    const Generator G = build_liouvillian(s, frame_at_detuning(s, delta, om), {3}, false);
    const CMat a = CMat(G.space->mode[0]);
    const CMat sg = CMat(G.space->atom[0]);
    const CMat H = delta * (a.adjoint() * a + sg.adjoint() * sg) + 0.8 * (a.adjoint() * sg + sg.adjoint() * a) +
                   om * (a + a.adjoint());
    Rng r(2, 0);
    const CMat rho = random_density(G.dim(), r);
    const CMat ref = -kI * (H * rho - rho * H) + s.kappa() * (a * rho * a.adjoint()) -
                     0.5 * s.kappa() * (a.adjoint() * a * rho + rho * a.adjoint() * a);
    CHECK((G.apply_physical(rho) - ref).cwiseAbs().maxCoeff() < 1e-12);

    const SpMat L = G.superoperator();
    Eigen::Map<const CVec> v(rho.data(), rho.size());
    const CVec lv = L * v;
    const CMat lr = Eigen::Map<const CMat>(lv.data(), G.dim(), G.dim());
    CHECK((lr - G.apply(rho)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("undriven system relaxes to vacuum")
{
    const SystemSpec s = cell_spec(2, 0.8, 0.3);
    const Generator G = build_liouvillian(s, frame_at_detuning(s, 0.1, 0.0), {2});
    CMat vac = CMat::Zero(G.dim(), G.dim());
    vac(0, 0) = 1.0;
    CHECK(G.apply(vac).cwiseAbs().maxCoeff() < 1e-12);
    for (SteadyMethod m : {SteadyMethod::NullSpace, SteadyMethod::TimeEvolve}) {
        const SteadyState ss = steady_state(G, m);
        CHECK((ss.rho() - vac).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("steady state invariants and residual")
{
    const SystemSpec s = cell_spec(1, 0.8, 0.05);
    const Generator G = build_liouvillian(s, frame_at_detuning(s, 0.3, 1e-3), {3});
    for (SteadyMethod m : {SteadyMethod::NullSpace, SteadyMethod::TimeEvolve}) {
        const SteadyState ss = steady_state(G, m);
        CHECK(ss.residual <= 1e-8);
        const CMat rho = ss.rho();
        CHECK(std::abs(rho.trace() - 1.0) < 1e-8);
        CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (rho + rho.adjoint()));
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("time evolution keeps trace and hermiticity")
{
    const SystemSpec s = cell_spec(1, 0.8, 0.3);
    const Generator G = build_liouvillian(s, frame_at_detuning(s, 0.2, 0.05), {3}, false);
    const SteadyState ss = steady_state(G, SteadyMethod::TimeEvolve);
    const CMat rho = ss.rho();
    CHECK(std::abs(rho.trace() - 1.0) < 1e-8);
    CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("null space and time evolution agree on g2")
{
    const SystemSpec s = cell_spec(1, 0.8, 0.05);
    const double a = me_g2(s, 0.3, 1e-3, SteadyMethod::NullSpace);
    const double b = me_g2(s, 0.3, 1e-3, SteadyMethod::TimeEvolve);
    CHECK(std::abs(a - b) / a < 1e-3);
}

TEST_CASE("weak drive reproduces the scattering correlation")
{
    const SystemSpec s = cell_spec(1, 0.8, 0.05);
    for (double d : {-0.7, -0.2, 0.0, 0.45}) {
        const double sc = correlation(s, frame_at_detuning(s, d), 2);
        const double me = me_g2(s, d, 1e-3, SteadyMethod::NullSpace);
        CHECK(std::abs(me - sc) / sc < 0.02);
    }
}

TEST_CASE("deviation at a perfect blockade point scales as the drive squared")
{
    const SystemSpec s = cell_spec(1, std::sqrt(3.0) / 2.0, 0.0);
    std::vector<double> lx, ly;
    for (double om : {1e-3, 2e-3, 4e-3, 8e-3}) {
        lx.push_back(std::log(om));
        ly.push_back(std::log(me_g2(s, 0.0, om, SteadyMethod::NullSpace)));
    }
    const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4, my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 4; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    CHECK(std::abs(sxy / sxx - 2.0) < 0.1);
}

TEST_CASE("raising the photon cutoff barely moves g2")
{
    const SystemSpec one = cell_spec(1, 0.8, 0.05);
    for (double d : {0.0, 0.4, -0.9}) {
        const double a = me_g2(one, d, 5e-3, SteadyMethod::NullSpace, 3);
        const double b = me_g2(one, d, 5e-3, SteadyMethod::NullSpace, 4);
        CHECK(std::abs(a - b) / b < 0.01);
    }
    // two cells at cutoff 4 is a 10^4 sparse solve, so one detuning only
    const SystemSpec two = cell_spec(2, 0.8, 0.05);
    const double a = me_g2(two, 0.4, 5e-3, SteadyMethod::NullSpace, 3);
    const double b = me_g2(two, 0.4, 5e-3, SteadyMethod::NullSpace, 4);
    CHECK(std::abs(a - b) / b < 0.01);
}

TEST_CASE("two resonant cells: three-photon correlation matches the scattering chain")
{
    const SystemSpec s = cell_spec(2, 0.8, 0.37);
    const DriveFrame f = frame_at_detuning(s, 0.0, 1e-3);
    const SteadyState ss = steady_state(build_liouvillian(s, f, {3}), SteadyMethod::NullSpace);
    const double sc = correlation(s, f, 3);
    CHECK(sc < 0.2);  // far from the coherent value 1
    CHECK(std::abs(me_correlation(ss, s, f, 3) - sc) / sc < 1e-3);
    CHECK(std::abs(me_correlation(ss, s, f, 2) - 1.0) < 1e-3);
}

TEST_CASE("direct coupling bunches where side coupling blocks")
{
    const SystemSpec side = cell_spec(1, 0.8, 0.05, 0.1);
    SystemSpec direct = side;
    direct.kind = Kind::DirectCoupledCavityAtom;
    CHECK(me_g2(direct, 0.0, 1e-3, SteadyMethod::NullSpace) > 10.0);
    CHECK(me_g2(side, 0.0, 1e-3, SteadyMethod::NullSpace) < 0.1);
}

TEST_CASE("trajectory config validation")
{
    TrajectoryConfig c;
    CHECK_NOTHROW(validate_trajectory_config(c));
    c.dt = 0.2;
    CHECK_THROWS_AS(validate_trajectory_config(c), InvalidSpec);
    c = TrajectoryConfig{};
    c.n_traj = 0;
    CHECK_THROWS_AS(validate_trajectory_config(c), InvalidSpec);
}

TEST_CASE("no-jump step: lost norm is the jump rate times dt")
{
    const SystemSpec s = cell_spec(2, 0.8, 0.3, 0.1);
    const Generator G = build_liouvillian(s, frame_at_detuning(s, 0.2, 0.3), {2}, false);
    Rng r(9, 0);
    CVec psi(G.dim());
    for (int i = 0; i < G.dim(); ++i) psi(i) = cplx(r.uniform(-1, 1), r.uniform(-1, 1));
    psi.normalize();
    for (double dt : {1e-2, 1e-3, 1e-4}) {
        const StepInfo st = no_jump_step(G, psi, dt);
        const double err = std::abs((1.0 - st.keep_probability) - dt * st.jump_rate);
        CHECK(err < 10.0 * dt * dt * std::max(1.0, st.jump_rate * st.jump_rate + G.h.norm() * G.h.norm()));
    }
    double sum = 0.0;
    for (const auto& L : G.jumps) sum += (L * psi).squaredNorm();
    CHECK(no_jump_step(G, psi, 1e-3).jump_rate == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("trajectories are reproducible for a fixed seed")
{
    const SystemSpec s = cell_spec(1, 0.8, 0.5);
    const DriveFrame f = frame_at_detuning(s, 0.0, 0.2);
    TrajectoryConfig c;
    c.n_traj = 8;
    c.t_steady = 20.0;
    c.seed = 77;
    const TrajectoryResult a = trajectory_g2(s, f, {3}, c);
    const TrajectoryResult b = trajectory_g2(s, f, {3}, c, false);
    CHECK(a.estimate == b.estimate);
    CHECK(a.std_error == b.std_error);
    CHECK(a.jumps == b.jumps);
    c.seed = 78;
    CHECK(trajectory_g2(s, f, {3}, c).estimate != a.estimate);
}

TEST_CASE("trajectories at the weak-drive operating point of two cells")
{
    const SystemSpec s = cell_spec(2, 0.8, 0.05);
    TrajectoryConfig c;
    c.n_traj = 100;
    c.t_steady = 1e3;
    c.seed = 5;
    const TrajectoryResult r = trajectory_g2(s, frame_at_detuning(s, 0.3, 5e-3), {3}, c);
    CHECK(std::isfinite(r.estimate));
    CHECK(r.mean_denominator > 0.0);
}

TEST_CASE("trajectory average converges to the steady state at the vacuum-Rabi dip")
{
    // jumps are rare here, so many short trajectories are needed for the snapshot to sample them
    const SystemSpec s = cell_spec(1, 0.8, 0.5);
    const DriveFrame f = frame_at_detuning(s, 0.0, 0.2);
    TrajectoryConfig c;
    c.n_traj = 3000;
    c.t_steady = 40.0;
    c.seed = 5;
    const TrajectoryResult t = trajectory_g2(s, f, {3}, c);
    const double ss = me_g2(s, 0.0, 0.2, SteadyMethod::NullSpace);
    CHECK(std::abs(t.estimate - ss) <= 3.0 * t.std_error);
    CHECK(t.std_error < 0.05 * ss);
}
