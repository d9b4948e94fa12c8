#include "freqasym/network.hpp"

#include "freqasym/errors.hpp"

#include <cmath>
#include <complex>
#include <map>

namespace freqasym {

Network::Network(const SystemModel& system) {
    const auto n = system.buses.size();
    g_diag_.assign(n, 0.0);
    b_diag_.assign(n, 0.0);
    adjacency_.assign(n, {});

    std::vector<std::map<int, std::complex<double>>> off(n);
    for (const auto& br : system.branches) {
        const int i = system.bus_index(br.from_bus);
        const int j = system.bus_index(br.to_bus);
        const std::complex<double> y = 1.0 / std::complex<double>(br.effective_resistance(), br.reactance);
        const double half_b = 0.5 * br.shunt_susceptance;
        g_diag_[i] += y.real();
        b_diag_[i] += y.imag() + half_b;
        g_diag_[j] += y.real();
        b_diag_[j] += y.imag() + half_b;
        if (i != j) {
            off[i][j] -= y;
            off[j][i] -= y;
            adjacency_[i].push_back(j);
            adjacency_[j].push_back(i);
        }
    }
    rows_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& [j, y] : off[i]) rows_[i].push_back({j, y.real(), y.imag()});
}

void Network::check_connected(int slack_index) const {
    std::vector<char> seen(rows_.size(), 0);
    std::vector<int> stack{slack_index};
    seen[slack_index] = 1;
    while (!stack.empty()) {
        const int k = stack.back();
        stack.pop_back();
        for (int j : adjacency_[k])
            if (!seen[j]) {
                seen[j] = 1;
                stack.push_back(j);
            }
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) throw IslandedNetwork("bus at index " + std::to_string(i) + " is not connected to the slack bus");
}

void Network::injections(std::span<const double> vm, std::span<const double> va,
                         std::span<double> p, std::span<double> q) const {
    const int n = size();
    for (int i = 0; i < n; ++i) {
        const double vi = vm[i];
        double pi = g_diag_[i] * vi * vi;
        double qi = -b_diag_[i] * vi * vi;
        for (const auto& e : rows_[i]) {
            const double t = va[i] - va[e.col];
            const double c = std::cos(t);
            const double s = std::sin(t);
            const double vv = vi * vm[e.col];
            pi += vv * (e.g * c + e.b * s);
            qi += vv * (e.g * s - e.b * c);
        }
        p[i] = pi;
        q[i] = qi;
    }
}

void Network::jacobian(std::span<const double> vm, std::span<const double> va,
                       Eigen::Ref<Eigen::MatrixXd> out, int offset) const {
    const int n = size();
    std::vector<double> p(n), q(n);
    injections(vm, va, p, q);
    const int P = offset, Q = offset + n, TH = offset, V = offset + n;
    for (int i = 0; i < n; ++i) {
        const double vi = vm[i];
        for (const auto& e : rows_[i]) {
            const int j = e.col;
            const double t = va[i] - va[j];
            const double c = std::cos(t);
            const double s = std::sin(t);
            const double gs_bc = e.g * s - e.b * c;
            const double gc_bs = e.g * c + e.b * s;
            out(P + i, TH + j) += vi * vm[j] * gs_bc;
            out(P + i, V + j) += vi * gc_bs;
            out(Q + i, TH + j) += -vi * vm[j] * gc_bs;
            out(Q + i, V + j) += vi * gs_bc;
        }
        out(P + i, TH + i) += -q[i] - b_diag_[i] * vi * vi;
        out(P + i, V + i) += p[i] / vi + g_diag_[i] * vi;
        out(Q + i, TH + i) += p[i] - g_diag_[i] * vi * vi;
        out(Q + i, V + i) += q[i] / vi - b_diag_[i] * vi;
    }
}

} // namespace freqasym
