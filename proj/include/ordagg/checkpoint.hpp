#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "ordagg/mlp.hpp"
#include "ordagg/policies.hpp"

namespace ordagg {

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json mlp_config_to_json(const MlpConfig& c) {
    return nlohmann::json{{"input_dim", c.input_dim},
                          {"output_dim", c.output_dim},
                          {"hidden_layers", c.hidden_layers},
                          {"hidden_size", c.hidden_size},
                          {"dropout_p", c.dropout_p},
                          {"learning_rate", c.learning_rate},
                          {"weight_decay", c.weight_decay},
                          {"batch_size", c.batch_size},
                          {"patience", c.patience},
                          {"max_epochs", c.max_epochs},
                          {"val_fraction", c.val_fraction},
                          {"seed", c.seed}};
}

inline MlpConfig mlp_config_from_json(const nlohmann::json& j) {
    MlpConfig c;
    c.input_dim = j.at("input_dim").get<int>();
    c.output_dim = j.at("output_dim").get<int>();
    c.hidden_layers = j.at("hidden_layers").get<int>();
    c.hidden_size = j.at("hidden_size").get<int>();
    c.dropout_p = j.at("dropout_p").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.patience = j.at("patience").get<int>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.val_fraction = j.at("val_fraction").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

/// JSON checkpoint with layer shapes, parameters, running statistics and
/// the originating config. Doubles round-trip bit-exactly (shortest
/// representation printing, correctly rounded parsing).
inline nlohmann::json network_to_json(const Network& net) {
    nlohmann::json j;
    j["version"] = kCheckpointVersion;
    j["config"] = mlp_config_to_json(net.config());
    j["hidden"] = nlohmann::json::array();
    for (std::size_t l = 0; l < net.hidden().size(); ++l) {
        const auto& d = net.hidden()[l];
        const auto& bn = net.norms()[l];
        j["hidden"].push_back({{"rows", d.w.rows},
                               {"cols", d.w.cols},
                               {"w", d.w.a},
                               {"b", d.b},
                               {"bn_gamma", bn.gamma},
                               {"bn_beta", bn.beta},
                               {"bn_running_mean", bn.running_mean},
                               {"bn_running_var", bn.running_var}});
    }
    j["output"] = {{"rows", net.output().w.rows},
                   {"cols", net.output().w.cols},
                   {"w", net.output().w.a},
                   {"b", net.output().b}};
    return j;
}

inline Network network_from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version");
    const MlpConfig cfg = mlp_config_from_json(j.at("config"));
    Network net(cfg, cfg.seed);
    auto load_dense = [](Network::Dense& d, const nlohmann::json& src) {
        const std::size_t rows = src.at("rows").get<std::size_t>();
        const std::size_t cols = src.at("cols").get<std::size_t>();
        if (d.w.rows != rows || d.w.cols != cols)
            throw std::runtime_error("checkpoint shape does not match config");
        d.w.a = src.at("w").get<std::vector<double>>();
        d.b = src.at("b").get<std::vector<double>>();
        if (d.w.a.size() != rows * cols || d.b.size() != rows)
            throw std::runtime_error("checkpoint parameter size mismatch");
    };
    const auto& hidden = j.at("hidden");
    if (hidden.size() != net.hidden().size())
        throw std::runtime_error("checkpoint layer count does not match config");
    for (std::size_t l = 0; l < net.hidden().size(); ++l) {
        load_dense(net.hidden()[l], hidden[l]);
        auto& bn = net.norms()[l];
        bn.gamma = hidden[l].at("bn_gamma").get<std::vector<double>>();
        bn.beta = hidden[l].at("bn_beta").get<std::vector<double>>();
        bn.running_mean = hidden[l].at("bn_running_mean").get<std::vector<double>>();
        bn.running_var = hidden[l].at("bn_running_var").get<std::vector<double>>();
        const std::size_t H = static_cast<std::size_t>(net.config().hidden_size);
        if (bn.gamma.size() != H || bn.beta.size() != H || bn.running_mean.size() != H ||
            bn.running_var.size() != H)
            throw std::runtime_error("checkpoint batch-norm size mismatch");
    }
    load_dense(net.output(), j.at("output"));
    return net;
}

inline void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << network_to_json(net).dump() << '\n';
}

inline Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    return network_from_json(j);
}

namespace detail {

inline nlohmann::json kfold_to_json(const KFoldResult& fit) {
    nlohmann::json j;
    j["fold_of_unit"] = fit.fold_of_unit;
    j["per_unit_loss"] = fit.per_unit_loss;
    j["networks"] = nlohmann::json::array();
    for (const Network& net : fit.networks) j["networks"].push_back(network_to_json(net));
    return j;
}

inline KFoldResult kfold_from_json(const nlohmann::json& j) {
    KFoldResult fit;
    fit.fold_of_unit = j.at("fold_of_unit").get<std::vector<int>>();
    fit.per_unit_loss = j.at("per_unit_loss").get<std::vector<double>>();
    for (const auto& n : j.at("networks")) fit.networks.push_back(network_from_json(n));
    return fit;
}

}  // namespace detail

/// Persist a trained policy's per-(environment, K) ensembles under a
/// directory; loading reproduces predictions bit-exactly.
inline void save_policy(const SlPolicy& policy, const std::string& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json meta;
    meta["policy"] = "sl";
    meta["version"] = kCheckpointVersion;
    meta["folds"] = policy.folds();
    meta["entries"] = nlohmann::json::array();
    for (const auto& [key, fit] : policy.fits()) {
        const std::string name =
            "sl_e" + std::to_string(key.first) + "_k" + std::to_string(key.second) + ".json";
        meta["entries"].push_back({{"env", key.first}, {"k", key.second}, {"file", name}});
        std::ofstream out(std::filesystem::path(dir) / name);
        out << detail::kfold_to_json(fit).dump() << '\n';
    }
    std::ofstream out(std::filesystem::path(dir) / "meta.json");
    out << meta.dump(2) << '\n';
}

inline SlPolicy load_sl_policy(const std::string& dir) {
    std::ifstream meta_in(std::filesystem::path(dir) / "meta.json");
    if (!meta_in) throw std::runtime_error("cannot open policy checkpoint dir: " + dir);
    nlohmann::json meta;
    meta_in >> meta;
    if (meta.at("policy") != "sl") throw std::runtime_error("checkpoint dir is not an sl policy");
    SlPolicy policy;
    policy.set_folds(meta.at("folds").get<int>());
    for (const auto& e : meta.at("entries")) {
        std::ifstream in(std::filesystem::path(dir) / e.at("file").get<std::string>());
        nlohmann::json j;
        in >> j;
        policy.fits()[{e.at("env").get<int>(), e.at("k").get<int>()}] =
            detail::kfold_from_json(j);
    }
    return policy;
}

inline void save_policy(const SlbPolicy& policy, const std::string& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json meta;
    meta["policy"] = "slb";
    meta["version"] = kCheckpointVersion;
    meta["folds"] = policy.folds();
    meta["num_thresholds"] = policy.num_thresholds();
    meta["entries"] = nlohmann::json::array();
    for (const auto& [key, fit] : policy.fits()) {
        const std::string name = "slb_e" + std::to_string(key.env_id) + "_k" +
                                 std::to_string(key.k) + "_y" + std::to_string(key.threshold) +
                                 ".json";
        meta["entries"].push_back(
            {{"env", key.env_id}, {"k", key.k}, {"threshold", key.threshold}, {"file", name}});
        std::ofstream out(std::filesystem::path(dir) / name);
        out << detail::kfold_to_json(fit).dump() << '\n';
    }
    std::ofstream out(std::filesystem::path(dir) / "meta.json");
    out << meta.dump(2) << '\n';
}

inline SlbPolicy load_slb_policy(const std::string& dir) {
    std::ifstream meta_in(std::filesystem::path(dir) / "meta.json");
    if (!meta_in) throw std::runtime_error("cannot open policy checkpoint dir: " + dir);
    nlohmann::json meta;
    meta_in >> meta;
    if (meta.at("policy") != "slb")
        throw std::runtime_error("checkpoint dir is not an slb policy");
    SlbPolicy policy;
    policy.set_shape(meta.at("num_thresholds").get<std::size_t>(), meta.at("folds").get<int>());
    for (const auto& e : meta.at("entries")) {
        std::ifstream in(std::filesystem::path(dir) / e.at("file").get<std::string>());
        nlohmann::json j;
        in >> j;
        policy.fits()[{e.at("env").get<int>(), e.at("k").get<int>(),
                       e.at("threshold").get<std::size_t>()}] = detail::kfold_from_json(j);
    }
    return policy;
}

}  // namespace ordagg
