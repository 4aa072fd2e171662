#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ordagg/checkpoint.hpp"
#include "ordagg/coarsen.hpp"
#include "ordagg/dataset_io.hpp"
#include "ordagg/evaluation.hpp"
#include "ordagg/synth.hpp"

namespace ordagg {

inline constexpr int kResultsSchemaVersion = 1;

/// Full configuration of one experiment run. Everything that affects the
/// numbers lives here; the output directory and job count do not.
struct RunConfig {
    // Input: either a dataset on disk or a synthetic population.
    std::string dataset_csv;
    std::string dataset_manifest;
    std::optional<SynthConfig> synth;

    int granularity = 11;  // 2, 5, or the dataset's own scale size
    std::vector<std::string> policies = {"regavg", "sl"};
    LossKind loss = LossKind::CumulativeLog;
    int k_min = 2;
    int k_max = 18;
    int train_environments = 30;
    int eval_environments = 30;
    std::vector<double> gamma_grid = default_gamma_grid();
    std::optional<int> output_set_size;  // default: floor(W/2)
    // MLP overrides on top of the granularity defaults.
    std::optional<int> mlp_hidden_layers, mlp_hidden_size, mlp_batch_size, mlp_patience,
        mlp_max_epochs;
    std::optional<double> mlp_learning_rate, mlp_weight_decay, mlp_dropout;
    int folds = 5;
    int bootstrap_resamples = 1000;
    double bootstrap_confidence = 0.95;
    int matching_grid = 100;
    std::uint64_t seed = 0;

    std::string out_dir = "out";
    std::string checkpoint_dir;  // save trained policy networks when set
    int jobs = 1;
    bool quiet = false;
};

namespace detail {

inline std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline void progress(const RunConfig& cfg, const std::string& msg) {
    if (!cfg.quiet) std::cerr << "[ordagg] " << msg << '\n';
}

}  // namespace detail

inline MlpConfig resolve_mlp_config(const RunConfig& cfg) {
    MlpConfig m = MlpConfig::defaults_for_granularity(cfg.granularity);
    if (cfg.mlp_hidden_layers) m.hidden_layers = *cfg.mlp_hidden_layers;
    if (cfg.mlp_hidden_size) m.hidden_size = *cfg.mlp_hidden_size;
    if (cfg.mlp_batch_size) m.batch_size = *cfg.mlp_batch_size;
    if (cfg.mlp_patience) m.patience = *cfg.mlp_patience;
    if (cfg.mlp_max_epochs) m.max_epochs = *cfg.mlp_max_epochs;
    if (cfg.mlp_learning_rate) m.learning_rate = *cfg.mlp_learning_rate;
    if (cfg.mlp_weight_decay) m.weight_decay = *cfg.mlp_weight_decay;
    if (cfg.mlp_dropout) m.dropout_p = *cfg.mlp_dropout;
    return m;
}

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    if (cfg.synth) {
        const SynthConfig& s = *cfg.synth;
        j["input"] = {{"kind", "synth"},
                      {"num_units", s.num_units},
                      {"num_workers", s.num_workers},
                      {"scale", s.scale.raw_labels()},
                      {"unit_location_spread", s.unit_location_spread},
                      {"unit_polarization_spread", s.unit_polarization_spread},
                      {"worker_bias_spread", s.worker_bias_spread},
                      {"worker_noise_spread", s.worker_noise_spread},
                      {"seed", s.seed}};
    } else {
        j["input"] = {{"kind", "dataset"},
                      {"csv", cfg.dataset_csv},
                      {"manifest", cfg.dataset_manifest}};
    }
    j["granularity"] = cfg.granularity;
    j["policies"] = cfg.policies;
    j["loss"] = to_string(cfg.loss);
    j["k_min"] = cfg.k_min;
    j["k_max"] = cfg.k_max;
    j["train_environments"] = cfg.train_environments;
    j["eval_environments"] = cfg.eval_environments;
    j["gamma_grid"] = cfg.gamma_grid;
    if (cfg.output_set_size) j["output_set_size"] = *cfg.output_set_size;
    const MlpConfig m = resolve_mlp_config(cfg);
    j["mlp"] = {{"hidden_layers", m.hidden_layers}, {"hidden_size", m.hidden_size},
                {"batch_size", m.batch_size},       {"learning_rate", m.learning_rate},
                {"weight_decay", m.weight_decay},   {"dropout_p", m.dropout_p},
                {"patience", m.patience},           {"max_epochs", m.max_epochs},
                {"val_fraction", m.val_fraction}};
    j["folds"] = cfg.folds;
    j["bootstrap"] = {{"resamples", cfg.bootstrap_resamples},
                      {"confidence", cfg.bootstrap_confidence}};
    j["matching_grid"] = cfg.matching_grid;
    j["seed"] = cfg.seed;
    return j;
}

/// Apply config-file values onto a RunConfig. The file mirrors the echoed
/// `config` object in results.json, so an echoed config can seed a rerun.
/// Missing keys keep their current values; CLI flags override afterwards.
inline void apply_run_config_json(RunConfig& cfg, const nlohmann::json& j) {
    if (j.contains("input")) {
        const auto& in = j.at("input");
        const std::string kind = in.value("kind", "dataset");
        if (kind == "synth") {
            SynthConfig s;
            s.num_units = in.value("num_units", s.num_units);
            s.num_workers = in.value("num_workers", s.num_workers);
            if (in.contains("scale")) s.scale = OrdinalScale(in.at("scale").get<std::vector<int>>());
            s.unit_location_spread = in.value("unit_location_spread", s.unit_location_spread);
            s.unit_polarization_spread =
                in.value("unit_polarization_spread", s.unit_polarization_spread);
            s.worker_bias_spread = in.value("worker_bias_spread", s.worker_bias_spread);
            s.worker_noise_spread = in.value("worker_noise_spread", s.worker_noise_spread);
            s.seed = in.value("seed", s.seed);
            cfg.synth = s;
        } else {
            cfg.dataset_csv = in.value("csv", cfg.dataset_csv);
            cfg.dataset_manifest = in.value("manifest", cfg.dataset_manifest);
            cfg.synth.reset();
        }
    }
    cfg.granularity = j.value("granularity", cfg.granularity);
    if (j.contains("policies")) cfg.policies = j.at("policies").get<std::vector<std::string>>();
    if (j.contains("loss")) cfg.loss = loss_kind_from_string(j.at("loss").get<std::string>());
    cfg.k_min = j.value("k_min", cfg.k_min);
    cfg.k_max = j.value("k_max", cfg.k_max);
    cfg.train_environments = j.value("train_environments", cfg.train_environments);
    cfg.eval_environments = j.value("eval_environments", cfg.eval_environments);
    if (j.contains("gamma_grid")) cfg.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
    if (j.contains("output_set_size")) cfg.output_set_size = j.at("output_set_size").get<int>();
    if (j.contains("mlp")) {
        const auto& m = j.at("mlp");
        if (m.contains("hidden_layers")) cfg.mlp_hidden_layers = m.at("hidden_layers").get<int>();
        if (m.contains("hidden_size")) cfg.mlp_hidden_size = m.at("hidden_size").get<int>();
        if (m.contains("batch_size")) cfg.mlp_batch_size = m.at("batch_size").get<int>();
        if (m.contains("patience")) cfg.mlp_patience = m.at("patience").get<int>();
        if (m.contains("max_epochs")) cfg.mlp_max_epochs = m.at("max_epochs").get<int>();
        if (m.contains("learning_rate"))
            cfg.mlp_learning_rate = m.at("learning_rate").get<double>();
        if (m.contains("weight_decay")) cfg.mlp_weight_decay = m.at("weight_decay").get<double>();
        if (m.contains("dropout_p")) cfg.mlp_dropout = m.at("dropout_p").get<double>();
    }
    cfg.folds = j.value("folds", cfg.folds);
    if (j.contains("bootstrap")) {
        cfg.bootstrap_resamples = j.at("bootstrap").value("resamples", cfg.bootstrap_resamples);
        cfg.bootstrap_confidence = j.at("bootstrap").value("confidence", cfg.bootstrap_confidence);
    }
    cfg.matching_grid = j.value("matching_grid", cfg.matching_grid);
    cfg.seed = j.value("seed", cfg.seed);
}

struct RunOutputs {
    std::filesystem::path results_json;
    std::filesystem::path loss_curves_csv;
    std::vector<std::filesystem::path> matching_csvs;
    std::vector<LossCurve> curves;
    std::vector<std::pair<std::string, MatchingCurve>> matching;  // challenger name -> curve
    GammaTuneResult gamma;
};

namespace detail {

inline FeedbackMatrix load_input(const RunConfig& cfg) {
    if (cfg.synth) return synth_generate(*cfg.synth).matrix;
    if (cfg.dataset_csv.empty() || cfg.dataset_manifest.empty())
        throw std::invalid_argument("run: provide either a dataset (csv + manifest) or a synth config");
    return ingest(cfg.dataset_csv, cfg.dataset_manifest);
}

inline FeedbackMatrix apply_granularity(const RunConfig& cfg, const FeedbackMatrix& m) {
    if (cfg.granularity == static_cast<int>(m.scale().size())) return m;
    if (cfg.granularity == 2) return coarsen_binary(m, derive_seed(cfg.seed, "coarsen_binary_stage"));
    if (cfg.granularity == 5) return coarsen_5pt(m, derive_seed(cfg.seed, "coarsen_5pt_stage"));
    throw std::invalid_argument("granularity " + std::to_string(cfg.granularity) +
                                " is not valid for a scale with " +
                                std::to_string(m.scale().size()) + " points");
}

inline void write_loss_curves_csv(const std::filesystem::path& path,
                                  const std::vector<LossCurve>& curves) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "policy,env,k,loss\n";
    for (const LossCurve& c : curves)
        for (std::size_t e = 0; e < c.env_ids.size(); ++e)
            for (std::size_t j = 0; j < c.k_values.size(); ++j)
                out << c.policy << ',' << c.env_ids[e] << ',' << c.k_values[j] << ','
                    << fmt_double(c.per_env_loss[e][j]) << '\n';
}

inline void write_matching_csv(const std::filesystem::path& path, const MatchingCurve& mc) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "grid_k,required_k,ci_low,ci_high\n";
    for (std::size_t i = 0; i < mc.grid.size(); ++i)
        out << fmt_double(mc.grid[i]) << ',' << fmt_double(mc.k_required[i]) << ','
            << fmt_double(mc.ci_low[i]) << ',' << fmt_double(mc.ci_high[i]) << '\n';
}

inline nlohmann::json curve_to_json(const LossCurve& c,
                                    const std::vector<std::pair<double, double>>& ci) {
    nlohmann::json j;
    j["policy"] = c.policy;
    j["k_values"] = c.k_values;
    j["env_ids"] = c.env_ids;
    j["mean_loss"] = c.mean_loss;
    std::vector<double> lo, hi;
    for (auto [l, h] : ci) {
        lo.push_back(l);
        hi.push_back(h);
    }
    j["ci_low"] = lo;
    j["ci_high"] = hi;
    j["per_env_loss"] = c.per_env_loss;
    return j;
}

}  // namespace detail

/// Execute the full pipeline: load -> split -> coarsen -> tune gamma on
/// train environments -> evaluate on eval environments -> bootstrap ->
/// matching curves -> write results. Byte-identical outputs for identical
/// configs, independent of the job count.
inline RunOutputs run_pipeline(const RunConfig& cfg) {
    if (cfg.k_min < 1 || cfg.k_max < cfg.k_min) throw std::invalid_argument("run: bad K range");
    if (cfg.policies.empty()) throw std::invalid_argument("run: no policies selected");

    detail::progress(cfg, "loading input");
    const FeedbackMatrix base = detail::load_input(cfg);
    const int W = static_cast<int>(base.num_workers());
    const int out_size = cfg.output_set_size.value_or(W / 2);
    const WorkerSplit split = split_workers(W, out_size, derive_seed(cfg.seed, "worker_split"));
    const int L = static_cast<int>(split.input_set.size());
    if (cfg.k_max > L)
        throw std::invalid_argument("run: k_max " + std::to_string(cfg.k_max) +
                                    " exceeds input-set size " + std::to_string(L));

    detail::progress(cfg, "coarsening to granularity " + std::to_string(cfg.granularity));
    const FeedbackMatrix m = detail::apply_granularity(cfg, base);
    const Cdf q0 = prior_q0(m, split);

    const std::vector<Environment> train_envs =
        sample_environments(L, cfg.train_environments, derive_seed(cfg.seed, "train_envs"), 0);
    const std::vector<Environment> eval_envs = sample_environments(
        L, cfg.eval_environments, derive_seed(cfg.seed, "eval_envs"), cfg.train_environments);

    std::vector<int> k_values;
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) k_values.push_back(k);

    RunOutputs outputs;
    bool tuned = false;
    std::vector<std::vector<std::pair<double, double>>> curve_cis;
    for (const std::string& name : cfg.policies) {
        if (name == "regavg") {
            detail::progress(cfg, "tuning gamma on " + std::to_string(train_envs.size()) +
                                      " train environments");
            outputs.gamma = tune_gamma(m, split, train_envs, k_values, cfg.loss, cfg.gamma_grid);
            tuned = true;
            detail::progress(cfg, "evaluating regavg");
            outputs.curves.push_back(run_experiment(
                m, split, eval_envs, RegAvgSpec{q0, outputs.gamma.gamma_by_k}, k_values, cfg.loss));
        } else if (name == "sl") {
            detail::progress(cfg, "training and evaluating sl");
            SlPolicy policy;
            policy.fit(m, split, eval_envs, k_values, resolve_mlp_config(cfg),
                       derive_seed(cfg.seed, "sl"), cfg.folds, cfg.jobs);
            outputs.curves.push_back(detail::loss_curve_from_predictor(
                m, split, eval_envs, k_values, cfg.loss, "sl",
                [&](const Environment& env, int k, std::size_t unit) {
                    return policy.predict(m, split, env, k, unit);
                }));
            if (!cfg.checkpoint_dir.empty())
                save_policy(policy, (std::filesystem::path(cfg.checkpoint_dir) / "sl").string());
        } else if (name == "slb") {
            detail::progress(cfg, "training and evaluating slb");
            SlbPolicy policy;
            policy.fit(m, split, eval_envs, k_values, resolve_mlp_config(cfg),
                       derive_seed(cfg.seed, "slb"), cfg.folds, cfg.jobs);
            outputs.curves.push_back(detail::loss_curve_from_predictor(
                m, split, eval_envs, k_values, cfg.loss, "slb",
                [&](const Environment& env, int k, std::size_t unit) {
                    return policy.predict(m, split, env, k, unit);
                }));
            if (!cfg.checkpoint_dir.empty())
                save_policy(policy, (std::filesystem::path(cfg.checkpoint_dir) / "slb").string());
        } else {
            throw std::invalid_argument("unknown policy: " + name +
                                        " (expected regavg|sl|slb)");
        }
    }

    detail::progress(cfg, "bootstrap intervals");
    BootstrapConfig boot{cfg.bootstrap_resamples, cfg.bootstrap_confidence,
                         derive_seed(cfg.seed, "bootstrap")};
    for (const LossCurve& c : outputs.curves) curve_cis.push_back(bootstrap_ci(c, boot));

    const LossCurve* ref = nullptr;
    for (const LossCurve& c : outputs.curves)
        if (c.policy == "regavg") ref = &c;
    if (ref != nullptr) {
        for (const LossCurve& c : outputs.curves) {
            if (c.policy == "regavg") continue;
            detail::progress(cfg, "matching curve: " + c.policy + " vs regavg");
            outputs.matching.emplace_back(c.policy,
                                          matching_curve(*ref, c, cfg.matching_grid, boot));
        }
    }

    // ---- write artifacts ----
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    nlohmann::json results;
    results["schema_version"] = kResultsSchemaVersion;
    results["config"] = run_config_to_json(cfg);
    if (tuned) {
        nlohmann::json g;
        for (auto [k, v] : outputs.gamma.gamma_by_k) g[std::to_string(k)] = v;
        nlohmann::json tl;
        for (auto [k, v] : outputs.gamma.train_loss_by_k) tl[std::to_string(k)] = v;
        results["gamma_tuning"] = {{"gamma_by_k", g}, {"train_loss_by_k", tl}};
    }
    results["curves"] = nlohmann::json::array();
    for (std::size_t i = 0; i < outputs.curves.size(); ++i)
        results["curves"].push_back(detail::curve_to_json(outputs.curves[i], curve_cis[i]));
    results["matching"] = nlohmann::json::array();
    for (const auto& [name, mc] : outputs.matching) {
        nlohmann::json j;
        j["challenger"] = name;
        j["reference"] = "regavg";
        j["grid"] = mc.grid;
        j["k_required"] = mc.k_required;
        j["ci_low"] = mc.ci_low;
        j["ci_high"] = mc.ci_high;
        j["unattained"] = mc.unattained;
        results["matching"].push_back(j);
    }

    outputs.results_json = dir / "results.json";
    {
        std::ofstream out(outputs.results_json);
        if (!out) throw std::runtime_error("cannot write " + outputs.results_json.string());
        out << results.dump(2) << '\n';
    }
    outputs.loss_curves_csv = dir / "loss_curves.csv";
    detail::write_loss_curves_csv(outputs.loss_curves_csv, outputs.curves);
    for (const auto& [name, mc] : outputs.matching) {
        std::filesystem::path p = dir / ("matching_" + name + ".csv");
        detail::write_matching_csv(p, mc);
        outputs.matching_csvs.push_back(p);
    }
    detail::progress(cfg, "done: " + outputs.results_json.string());
    return outputs;
}

/// Load a `policy,env,k,loss` CSV (as written by run_pipeline) back into
/// per-policy loss curves, e.g. for standalone matching-curve analysis.
inline std::vector<LossCurve> load_loss_curves_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open loss curves: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    if (detail::split_csv_line(line) != std::vector<std::string>{"policy", "env", "k", "loss"})
        throw DataError(path + ":1: expected header policy,env,k,loss");
    std::map<std::string, std::map<int, std::map<int, double>>> table;  // policy -> env -> k
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 4)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 fields");
        try {
            table[f[0]][std::stoi(f[1])][std::stoi(f[2])] = std::stod(f[3]);
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(line_no) + ": bad numeric field");
        }
    }
    std::vector<LossCurve> curves;
    for (const auto& [policy, envs] : table) {
        LossCurve c;
        c.policy = policy;
        for (const auto& [k, v] : envs.begin()->second) c.k_values.push_back(k);
        for (const auto& [env, row] : envs) {
            if (row.size() != c.k_values.size())
                throw DataError(path + ": ragged K values for policy " + policy);
            c.env_ids.push_back(env);
            std::vector<double> losses;
            for (int k : c.k_values) {
                auto it = row.find(k);
                if (it == row.end())
                    throw DataError(path + ": missing K=" + std::to_string(k) + " for policy " +
                                    policy);
                losses.push_back(it->second);
            }
            c.per_env_loss.push_back(std::move(losses));
        }
        c.finalize();
        curves.push_back(std::move(c));
    }
    return curves;
}

}  // namespace ordagg
