#include "freqasym/power_flow.hpp"

#include "freqasym/controls.hpp"
#include "freqasym/errors.hpp"
#include "freqasym/network.hpp"

#include <Eigen/LU>

#include <cmath>

namespace freqasym {

double scheduled_generation(const SystemModel& system, int bus_id) {
    double p = 0.0;
    for (const auto& m : system.machines)
        if (m.bus == bus_id) p += m.mechanical_power;
    if (system.wind && system.wind->bus == bus_id) {
        const auto& w = *system.wind;
        p += apc_power_order(w, system.f_nominal, system.f_nominal, wind_available_power(w.mean_speed, w));
    }
    return p;
}

PowerFlowSolution solve_power_flow(const SystemModel& system, const PowerFlowOptions& options) {
    system.validate();
    const Network net(system);
    const int n = net.size();

    int slack = -1;
    for (int i = 0; i < n; ++i)
        if (system.buses[i].type == BusType::Slack) slack = i;
    net.check_connected(slack);

    std::vector<double> p_load(n, 0.0), q_load(n, 0.0), p_spec(n, 0.0);
    for (const auto& l : system.loads) {
        const int k = system.bus_index(l.bus);
        p_load[k] += l.base_p;
        q_load[k] += l.base_q;
    }
    for (int i = 0; i < n; ++i) p_spec[i] = scheduled_generation(system, system.buses[i].id) - p_load[i];

    // Unknown ordering: angles of non-slack buses, then magnitudes of PQ buses.
    std::vector<int> ang_idx, mag_idx;
    for (int i = 0; i < n; ++i) {
        if (i != slack) ang_idx.push_back(i);
        if (system.buses[i].type == BusType::PQ) mag_idx.push_back(i);
    }
    const int na = static_cast<int>(ang_idx.size());
    const int nu = na + static_cast<int>(mag_idx.size());

    std::vector<double> vm(n), va(n), p(n), q(n);
    for (int i = 0; i < n; ++i) {
        vm[i] = system.buses[i].type == BusType::PQ ? 1.0 : system.buses[i].voltage_magnitude;
        va[i] = system.buses[i].voltage_angle;
    }

    PowerFlowSolution sol;
    Eigen::VectorXd mismatch(nu);
    Eigen::MatrixXd full(2 * n, 2 * n), jac(nu, nu);
    auto evaluate = [&] {
        net.injections(vm, va, p, q);
        for (int r = 0; r < na; ++r) mismatch(r) = p[ang_idx[r]] - p_spec[ang_idx[r]];
        for (std::size_t r = 0; r < mag_idx.size(); ++r) mismatch(na + r) = q[mag_idx[r]] + q_load[mag_idx[r]];
        return nu == 0 ? 0.0 : mismatch.cwiseAbs().maxCoeff();
    };

    double worst = evaluate();
    int it = 0;
    while (worst > options.tolerance) {
        if (it >= options.max_iterations)
            throw NonConvergence("power flow did not converge in " + std::to_string(it) + " iterations", worst);
        full.setZero();
        net.jacobian(vm, va, full);
        for (int r = 0; r < nu; ++r) {
            const int row = r < na ? ang_idx[r] : n + mag_idx[r - na];
            for (int c = 0; c < nu; ++c) {
                const int col = c < na ? ang_idx[c] : n + mag_idx[c - na];
                jac(r, c) = full(row, col);
            }
        }
        const Eigen::VectorXd dx = jac.partialPivLu().solve(-mismatch);
        for (int r = 0; r < na; ++r) va[ang_idx[r]] += dx(r);
        for (std::size_t r = 0; r < mag_idx.size(); ++r) vm[mag_idx[r]] += dx(na + r);
        ++it;
        worst = evaluate();
        if (!std::isfinite(worst)) throw NonConvergence("power flow diverged", worst);
    }

    sol.voltage_magnitude = vm;
    sol.voltage_angle = va;
    sol.p_injection = p;
    sol.q_injection = q;
    sol.p_generation.resize(n);
    sol.q_generation.resize(n);
    for (int i = 0; i < n; ++i) {
        sol.p_generation[i] = p[i] + p_load[i];
        sol.q_generation[i] = q[i] + q_load[i];
        sol.p_loss += p[i];
        sol.q_loss += q[i];
    }
    sol.iterations = it;
    sol.residual = worst;
    return sol;
}

} // namespace freqasym
