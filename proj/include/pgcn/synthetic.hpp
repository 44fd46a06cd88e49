#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "pgcn/data.hpp"

namespace pgcn {

// Synthetic traffic with controllable time-varying spatial correlation:
// nodes are partitioned into groups, every node follows its group's latent
// daily trajectory plus independent gaussian noise, and the partition is
// re-drawn at each regime boundary.
struct SyntheticSpec {
    int nodes = 8;
    int length = 2000;
    int frequency_minutes = 5;
    double noise = 0.05;
    std::uint64_t seed = 7;
    std::string start = "2012-03-01 00:00:00";

    struct Regime {
        int start_row = 0;
        std::vector<int> groups;  // group id per node
    };
    std::vector<Regime> regimes;  // ascending start rows; first must be 0

    void validate() const;
    static SyntheticSpec load(const std::string& path);  // flat key=value, `#` comments
    void save(const std::string& path) const;

    // 8 nodes, two regimes with re-partnered groups at the midpoint
    static SyntheticSpec two_regime_default();
};

struct SyntheticData {
    SignalTable table;
    std::vector<std::vector<int>> group_at;  // [row][node]

    int group_of(int row, int node) const {
        return group_at[static_cast<std::size_t>(row)][static_cast<std::size_t>(node)];
    }
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Bidirectional ring over n nodes; a plausible physical topology for the
// transition-matrix terms on synthetic data.
std::vector<std::tuple<int, int, double>> ring_edges(int n);

void write_edge_csv(const std::string& path, const std::vector<std::string>& names,
                    const std::vector<std::tuple<int, int, double>>& edges);

}  // namespace pgcn
