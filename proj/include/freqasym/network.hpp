#pragma once

#include "freqasym/grid.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace freqasym {

/// Bus admittance structure of a SystemModel with sparse row storage.
/// Injections are the powers flowing from each bus into the network.
class Network {
public:
    explicit Network(const SystemModel& system);

    int size() const { return static_cast<int>(rows_.size()); }

    /// Throws IslandedNetwork unless every bus reaches the slack bus.
    void check_connected(int slack_index) const;

    void injections(std::span<const double> vm, std::span<const double> va,
                    std::span<double> p, std::span<double> q) const;

    /// Dense Jacobian of [P; Q] with respect to [theta; V] (2n x 2n), written into `out`
    /// at row/column offset `offset`.
    void jacobian(std::span<const double> vm, std::span<const double> va,
                  Eigen::Ref<Eigen::MatrixXd> out, int offset = 0) const;

private:
    struct Entry {
        int col;
        double g;
        double b;
    };
    std::vector<std::vector<Entry>> rows_; // off-diagonal entries
    std::vector<double> g_diag_;
    std::vector<double> b_diag_;
    std::vector<std::vector<int>> adjacency_;
};

} // namespace freqasym
