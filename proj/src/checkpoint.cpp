#include "attbench/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace attbench {

namespace {

using nlohmann::json;

json tensor_to_json(const Tensor& t) {
    return json{{"rows", t.rows}, {"cols", t.cols}, {"data", t.v}};
}

Tensor tensor_from_json(const json& j, const std::string& what) {
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    std::vector<double> data = j.at("data").get<std::vector<double>>();
    if (rows < 0 || cols < 0 ||
        data.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw std::runtime_error("checkpoint: tensor shape mismatch in " + what);
    Tensor t(rows, cols);
    t.v = std::move(data);
    return t;
}

} // namespace

void save_checkpoint(const std::string& path, const Network& net, const Standardizer& stand) {
    json j;
    j["version"] = kCheckpointVersion;
    j["net"] = {{"arch", to_string(net.cfg.arch)},
                {"num_layers", net.cfg.num_layers},
                {"hidden", net.cfg.hidden},
                {"grouped_input", net.cfg.grouped_input},
                {"weight_dropout", net.cfg.weight_dropout},
                {"activation_dropout", net.cfg.activation_dropout}};
    j["standardizer"] = {{"mean", stand.mean}, {"stddev", stand.stddev}};

    json params = json::object();
    for (const auto& [name, p] : net.params) params[name] = tensor_to_json(p);
    j["params"] = std::move(params);

    json bn = json::object();
    for (const auto& [name, s] : net.bn)
        bn[name] = {{"mean", s.mean.v}, {"var", s.var.v}, {"batches", s.batches}};
    j["bn"] = std::move(bn);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
    out << j.dump(1, '\t') << '\n';
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("checkpoint: invalid JSON in " + path + ": " + e.what());
    }

    if (!j.contains("version")) throw std::runtime_error("checkpoint: missing version field");
    const int ver = j.at("version").get<int>();
    if (ver != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(ver));

    NetConfig cfg;
    const json& jn = j.at("net");
    cfg.arch = arch_from_string(jn.at("arch").get<std::string>());
    cfg.num_layers = jn.at("num_layers").get<int>();
    cfg.hidden = jn.at("hidden").get<int>();
    cfg.grouped_input = jn.at("grouped_input").get<bool>();
    cfg.weight_dropout = jn.at("weight_dropout").get<double>();
    cfg.activation_dropout = jn.at("activation_dropout").get<double>();
    cfg.validate();

    Checkpoint ck;
    // a freshly created skeleton pins the expected parameter names and shapes
    Rng shape_rng(0);
    ck.net = Network::create(cfg, shape_rng);

    const json& jp = j.at("params");
    if (jp.size() != ck.net.params.size())
        throw std::runtime_error("checkpoint: parameter set does not match architecture");
    for (auto& [name, p] : ck.net.params) {
        if (!jp.contains(name)) throw std::runtime_error("checkpoint: missing parameter " + name);
        Tensor t = tensor_from_json(jp.at(name), name);
        if (!t.same_shape(p))
            throw std::runtime_error("checkpoint: shape of " + name + " does not match architecture");
        p = std::move(t);
    }

    const json& jb = j.at("bn");
    if (jb.size() != ck.net.bn.size())
        throw std::runtime_error("checkpoint: batchnorm set does not match architecture");
    for (auto& [name, s] : ck.net.bn) {
        if (!jb.contains(name)) throw std::runtime_error("checkpoint: missing batchnorm " + name);
        const json& e = jb.at(name);
        std::vector<double> mean = e.at("mean").get<std::vector<double>>();
        std::vector<double> var = e.at("var").get<std::vector<double>>();
        if (mean.size() != s.mean.size() || var.size() != s.var.size())
            throw std::runtime_error("checkpoint: batchnorm width of " + name +
                                     " does not match architecture");
        s.mean.v = std::move(mean);
        s.var.v = std::move(var);
        s.batches = e.at("batches").get<long long>();
    }

    const json& js = j.at("standardizer");
    const auto mean = js.at("mean").get<std::vector<double>>();
    const auto stddev = js.at("stddev").get<std::vector<double>>();
    if (mean.size() != 6 || stddev.size() != 6)
        throw std::runtime_error("checkpoint: standardizer must carry 6 channels");
    std::copy(mean.begin(), mean.end(), ck.stand.mean.begin());
    std::copy(stddev.begin(), stddev.end(), ck.stand.stddev.begin());
    return ck;
}

} // namespace attbench
