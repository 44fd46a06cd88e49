#include "pgcn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "pgcn/errors.hpp"

namespace pgcn {

void SyntheticSpec::validate() const {
    if (nodes < 2) throw ConfigError("synthetic: need at least 2 nodes");
    if (length < 2) throw ConfigError("synthetic: need at least 2 rows");
    if (frequency_minutes < 1) throw ConfigError("synthetic: frequency must be positive");
    if (noise < 0) throw ConfigError("synthetic: noise scale must be nonnegative");
    if (regimes.empty()) throw ConfigError("synthetic: at least one regime required");
    if (regimes.front().start_row != 0) throw ConfigError("synthetic: first regime must start at row 0");
    int prev = -1;
    for (const Regime& r : regimes) {
        if (r.start_row <= prev) throw ConfigError("synthetic: regime starts must be strictly increasing");
        if (r.start_row >= length) throw ConfigError("synthetic: regime start beyond series length");
        if (static_cast<int>(r.groups.size()) != nodes) {
            throw ConfigError("synthetic: regime group assignment has " + std::to_string(r.groups.size()) +
                              " entries for " + std::to_string(nodes) + " nodes");
        }
        for (int g : r.groups)
            if (g < 0) throw ConfigError("synthetic: group ids must be nonnegative");
        prev = r.start_row;
    }
}

SyntheticSpec SyntheticSpec::two_regime_default() {
    SyntheticSpec spec;
    spec.regimes.push_back({0, {0, 0, 0, 0, 1, 1, 1, 1}});
    spec.regimes.push_back({1000, {0, 1, 0, 1, 0, 1, 0, 1}});
    return spec;
}

namespace {

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::string tok;
    std::istringstream is(s);
    while (std::getline(is, tok, ',')) out.push_back(std::stoi(strip(tok)));
    return out;
}

}  // namespace

SyntheticSpec SyntheticSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open synthetic spec: " + path);
    SyntheticSpec spec;
    spec.regimes.clear();
    std::vector<std::pair<int, Regime>> numbered;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = strip(line);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = strip(s.substr(0, eq));
        std::string value = strip(s.substr(eq + 1));
        try {
            if (key == "nodes")
                spec.nodes = std::stoi(value);
            else if (key == "length")
                spec.length = std::stoi(value);
            else if (key == "frequency_minutes")
                spec.frequency_minutes = std::stoi(value);
            else if (key == "noise")
                spec.noise = std::stod(value);
            else if (key == "seed")
                spec.seed = std::stoull(value);
            else if (key == "start")
                spec.start = value;
            else if (key.rfind("regime.", 0) == 0) {
                auto dot = key.find('.', 7);
                if (dot == std::string::npos) throw ParseError("bad regime key `" + key + "`");
                int idx = std::stoi(key.substr(7, dot - 7));
                std::string field = key.substr(dot + 1);
                auto it = std::find_if(numbered.begin(), numbered.end(),
                                       [idx](const auto& p) { return p.first == idx; });
                if (it == numbered.end()) {
                    numbered.emplace_back(idx, Regime{});
                    it = numbered.end() - 1;
                }
                if (field == "start")
                    it->second.start_row = std::stoi(value);
                else if (field == "groups")
                    it->second.groups = parse_int_list(value);
                else
                    throw ParseError("unknown regime field `" + field + "`");
            } else {
                throw ParseError("unknown key `" + key + "`");
            }
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    std::sort(numbered.begin(), numbered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [idx, regime] : numbered) spec.regimes.push_back(std::move(regime));
    spec.validate();
    return spec;
}

void SyntheticSpec::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "nodes=" << nodes << "\n";
    out << "length=" << length << "\n";
    out << "frequency_minutes=" << frequency_minutes << "\n";
    out << "noise=" << format_value(noise) << "\n";
    out << "seed=" << seed << "\n";
    out << "start=" << start << "\n";
    for (std::size_t i = 0; i < regimes.size(); ++i) {
        out << "regime." << i << ".start=" << regimes[i].start_row << "\n";
        out << "regime." << i << ".groups=";
        for (std::size_t j = 0; j < regimes[i].groups.size(); ++j) {
            if (j) out << ",";
            out << regimes[i].groups[j];
        }
        out << "\n";
    }
}

namespace {

struct GroupProfile {
    double daily_phase;
    double daily_amp;
    struct Wave {
        double period_minutes;
        double amp;
        double phase;
    };
    std::vector<Wave> waves;

    double eval(double minutes_since_start, double day_fraction) const {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        double v = 50.0 + daily_amp * std::sin(two_pi * day_fraction + daily_phase);
        for (const Wave& w : waves) v += w.amp * std::sin(two_pi * minutes_since_start / w.period_minutes + w.phase);
        return v;
    }
};

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::uniform_real_distribution<double> phase_dist(0.0, two_pi);
    std::uniform_real_distribution<double> daily_amp_dist(8.0, 14.0);
    // slow waves (3h-8h) keep the trajectory smooth at the window scale
    std::uniform_real_distribution<double> period_dist(180.0, 480.0);
    std::uniform_real_distribution<double> wave_amp_dist(3.0, 6.0);

    // latent profile per (regime, group), drawn before any noise so the
    // noiseless series is identical under noise-scale changes
    std::vector<std::vector<GroupProfile>> profiles;
    for (const SyntheticSpec::Regime& regime : spec.regimes) {
        const int num_groups = 1 + *std::max_element(regime.groups.begin(), regime.groups.end());
        std::vector<GroupProfile> per_group;
        for (int g = 0; g < num_groups; ++g) {
            GroupProfile p;
            p.daily_phase = phase_dist(rng);
            p.daily_amp = daily_amp_dist(rng);
            for (int w = 0; w < 2; ++w) {
                GroupProfile::Wave wave;
                wave.period_minutes = period_dist(rng);
                wave.amp = wave_amp_dist(rng);
                wave.phase = phase_dist(rng);
                p.waves.push_back(wave);
            }
            per_group.push_back(std::move(p));
        }
        profiles.push_back(std::move(per_group));
    }

    const std::int64_t start_ts = parse_timestamp(spec.start);
    SyntheticData out;
    out.table.frequency_minutes = spec.frequency_minutes;
    out.table.node_names.reserve(static_cast<std::size_t>(spec.nodes));
    for (int i = 0; i < spec.nodes; ++i) out.table.node_names.push_back("s" + std::to_string(i));
    out.table.timestamps.reserve(static_cast<std::size_t>(spec.length));
    out.group_at.assign(static_cast<std::size_t>(spec.length), std::vector<int>(static_cast<std::size_t>(spec.nodes)));

    std::vector<double> data(static_cast<std::size_t>(spec.length) * spec.nodes);
    std::normal_distribution<double> noise_dist(0.0, 1.0);
    std::size_t regime_idx = 0;
    for (int row = 0; row < spec.length; ++row) {
        while (regime_idx + 1 < spec.regimes.size() && spec.regimes[regime_idx + 1].start_row <= row) ++regime_idx;
        const SyntheticSpec::Regime& regime = spec.regimes[regime_idx];
        const std::int64_t ts = start_ts + static_cast<std::int64_t>(row) * spec.frequency_minutes * 60;
        out.table.timestamps.push_back(ts);
        const double minutes = static_cast<double>(row) * spec.frequency_minutes;
        const double day_fraction = static_cast<double>(((ts % 86400) + 86400) % 86400) / 86400.0;
        for (int node = 0; node < spec.nodes; ++node) {
            const int g = regime.groups[static_cast<std::size_t>(node)];
            out.group_at[static_cast<std::size_t>(row)][static_cast<std::size_t>(node)] = g;
            double v = profiles[regime_idx][static_cast<std::size_t>(g)].eval(minutes, day_fraction);
            if (spec.noise > 0.0) v += spec.noise * noise_dist(rng);
            data[static_cast<std::size_t>(row) * spec.nodes + node] = v;
        }
    }
    out.table.values = Tensor({spec.length, spec.nodes}, std::move(data));
    return out;
}

std::vector<std::tuple<int, int, double>> ring_edges(int n) {
    std::vector<std::tuple<int, int, double>> edges;
    for (int i = 0; i < n; ++i) {
        const int j = (i + 1) % n;
        edges.emplace_back(i, j, 1.0);
        edges.emplace_back(j, i, 1.0);
    }
    return edges;
}

void write_edge_csv(const std::string& path, const std::vector<std::string>& names,
                    const std::vector<std::tuple<int, int, double>>& edges) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "from,to,weight\n";
    for (const auto& [from, to, w] : edges) {
        out << names.at(static_cast<std::size_t>(from)) << "," << names.at(static_cast<std::size_t>(to)) << ","
            << format_value(w) << "\n";
    }
}

}  // namespace pgcn
