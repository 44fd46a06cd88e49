#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgcn/model.hpp"

namespace pgcn::cli {

// Flat key=value run configuration (`#` comments allowed). Flags override
// file values; the effective configuration is fully serialized into the
// output directory before any training starts.
struct RunConfig {
    std::string data_path;
    std::string graph_path;
    std::string out_dir = "run_out";
    std::string split = "0.7,0.1,0.2";  // fractions, or "days:21,2,7"
    bool mask_zero = true;
    bool time_of_day = false;

    PGCNConfig model;

    int epochs = 100;
    int batch_size = 64;
    std::uint64_t seed = 1;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    double clip_norm = 5.0;

    void set(const std::string& key, const std::string& value);
    static RunConfig load(const std::string& path);
    void save(const std::string& path) const;
};

// Entry point used by both the binary and the tests. `args` excludes the
// program name. Exit codes: 0 ok, 2 configuration, 3 data, 4 numeric.
int run_cli(std::vector<std::string> args);

}  // namespace pgcn::cli
