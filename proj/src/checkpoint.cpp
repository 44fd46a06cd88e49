#include "pgcn/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "pgcn/errors.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint blobs assume a little-endian host");

namespace pgcn {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_ints(const std::vector<int>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += std::to_string(v[i]);
    }
    return out;
}

std::vector<int> parse_ints(const std::string& s, char sep) {
    std::vector<int> out;
    std::string tok;
    std::istringstream is(s);
    while (std::getline(is, tok, sep)) {
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

}  // namespace

void save_checkpoint(const std::string& path, PGCNModel& model, const CheckpointMeta& meta) {
    const PGCNConfig& c = model.config();
    std::ofstream manifest(path);
    if (!manifest) throw DataError("cannot write checkpoint manifest: " + path);
    manifest << "format=pgcn-checkpoint-v1\n";
    manifest << "num_nodes=" << model.num_nodes() << "\n";
    manifest << "graph_undirected=" << (model.graph_undirected() ? 1 : 0) << "\n";
    manifest << "seed=" << meta.seed << "\n";
    manifest << "epoch=" << meta.epoch << "\n";
    manifest << "val_mae=" << fmt_double(meta.val_mae) << "\n";
    manifest << "config.num_layers=" << c.num_layers << "\n";
    manifest << "config.hidden_dim=" << c.hidden_dim << "\n";
    manifest << "config.dilations=" << join_ints(c.dilations, ',') << "\n";
    manifest << "config.kernel_size=" << c.kernel_size << "\n";
    manifest << "config.diffusion_steps=" << c.diffusion_steps << "\n";
    manifest << "config.input_window=" << c.input_window << "\n";
    manifest << "config.output_window=" << c.output_window << "\n";
    manifest << "config.input_channels=" << c.input_channels << "\n";
    manifest << "config.skip_dim=" << c.skip_dim << "\n";
    manifest << "config.end_dim=" << c.end_dim << "\n";
    manifest << "config.adjacency_combo=" << c.combo.str() << "\n";
    manifest << "config.progressive_single_hop=" << (c.progressive_single_hop ? 1 : 0) << "\n";
    manifest << "config.sa_embedding_dim=" << c.sa_embedding_dim << "\n";

    const std::string bin_path = path + ".bin";
    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw DataError("cannot write checkpoint blob: " + bin_path);
    std::size_t offset = 0;
    for (Parameter* p : model.parameters()) {
        manifest << "param=" << p->name << " shape=" << join_ints(p->value.shape(), 'x') << " offset=" << offset
                 << "\n";
        bin.write(reinterpret_cast<const char*>(p->value.data()),
                  static_cast<std::streamsize>(p->numel() * sizeof(double)));
        offset += p->numel() * sizeof(double);
    }
    if (!manifest || !bin) throw DataError("short write while saving checkpoint " + path);
}

PGCNModel load_checkpoint(const std::string& path, CheckpointMeta* meta_out) {
    std::ifstream manifest(path);
    if (!manifest) throw DataError("cannot open checkpoint manifest: " + path);

    std::map<std::string, std::string> kv;
    struct ParamEntry {
        std::string name;
        std::vector<int> shape;
        std::size_t offset;
    };
    std::vector<ParamEntry> entries;

    std::string line;
    int lineno = 0;
    while (std::getline(manifest, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (key == "param") {
            // param=<name> shape=<d0>x<d1> offset=<bytes>
            std::istringstream is(value);
            ParamEntry entry;
            std::string shape_field, offset_field;
            if (!(is >> entry.name >> shape_field >> offset_field) || shape_field.rfind("shape=", 0) != 0 ||
                offset_field.rfind("offset=", 0) != 0) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": malformed param line");
            }
            entry.shape = parse_ints(shape_field.substr(6), 'x');
            entry.offset = std::stoull(offset_field.substr(7));
            entries.push_back(std::move(entry));
        } else {
            kv[key] = value;
        }
    }
    auto need = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(path + ": missing key `" + key + "`");
        return it->second;
    };
    if (need("format") != "pgcn-checkpoint-v1") throw ParseError(path + ": unsupported format `" + kv["format"] + "`");

    PGCNConfig config;
    config.num_layers = std::stoi(need("config.num_layers"));
    config.hidden_dim = std::stoi(need("config.hidden_dim"));
    config.dilations = parse_ints(need("config.dilations"), ',');
    config.kernel_size = std::stoi(need("config.kernel_size"));
    config.diffusion_steps = std::stoi(need("config.diffusion_steps"));
    config.input_window = std::stoi(need("config.input_window"));
    config.output_window = std::stoi(need("config.output_window"));
    config.input_channels = std::stoi(need("config.input_channels"));
    config.skip_dim = std::stoi(need("config.skip_dim"));
    config.end_dim = std::stoi(need("config.end_dim"));
    config.combo = AdjacencyCombo::parse(need("config.adjacency_combo"));
    config.progressive_single_hop = need("config.progressive_single_hop") == "1";
    config.sa_embedding_dim = std::stoi(need("config.sa_embedding_dim"));

    const int num_nodes = std::stoi(need("num_nodes"));
    const bool undirected = need("graph_undirected") == "1";
    CheckpointMeta meta;
    meta.seed = std::stoull(need("seed"));
    meta.epoch = std::stoi(need("epoch"));
    meta.val_mae = std::stod(need("val_mae"));

    PGCNModel model(config, num_nodes, undirected, meta.seed);
    std::vector<Parameter*> params = model.parameters();
    if (params.size() != entries.size()) {
        throw DimensionError(path + ": manifest lists " + std::to_string(entries.size()) + " parameters, model has " +
                             std::to_string(params.size()));
    }

    const std::string bin_path = path + ".bin";
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw DataError("cannot open checkpoint blob: " + bin_path);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        const ParamEntry& e = entries[i];
        if (e.name != p.name) {
            throw DimensionError(path + ": parameter #" + std::to_string(i) + " is `" + e.name + "`, expected `" +
                                 p.name + "`");
        }
        if (e.shape != p.value.shape()) {
            throw DimensionError(path + ": parameter `" + e.name + "` has shape " + shape_str(e.shape) +
                                 ", config requires " + shape_str(p.value.shape()));
        }
        bin.seekg(static_cast<std::streamoff>(e.offset));
        bin.read(reinterpret_cast<char*>(p.value.data()),
                 static_cast<std::streamsize>(p.numel() * sizeof(double)));
        if (!bin) throw DataError(bin_path + ": short read for parameter `" + e.name + "`");
    }
    if (meta_out) *meta_out = meta;
    return model;
}

}  // namespace pgcn
