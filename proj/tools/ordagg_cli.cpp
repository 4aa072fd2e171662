// ordagg command-line front end: dataset ingestion, synthetic population
// generation, coarsening, rater-noise statistics, full experiment runs and
// standalone matching-curve analysis.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ordagg/coarsen.hpp"
#include "ordagg/dataset_io.hpp"
#include "ordagg/runner.hpp"
#include "ordagg/synth.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitData = 2;

void write_truth_csv(const ordagg::SynthResult& result, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "unit_id,score,cdf\n";
    const auto& scale = result.matrix.scale();
    for (std::size_t t = 0; t < result.matrix.num_units(); ++t)
        for (std::size_t i = 0; i < scale.size(); ++i)
            out << result.matrix.unit_ids()[t] << ',' << scale.raw(i) << ','
                << ordagg::detail::fmt_double(result.population_cdf[t].values[i]) << '\n';
}

int cmd_ingest(const std::string& csv, const std::string& manifest, const std::string& out_dir) {
    ordagg::FeedbackMatrix m = ordagg::ingest(csv, manifest);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        ordagg::export_csv(m, (fs::path(out_dir) / "dataset.csv").string());
        ordagg::manifest_for(m).save((fs::path(out_dir) / "manifest.json").string());
    }
    json summary{{"units", m.num_units()},
                 {"workers", m.num_workers()},
                 {"scale_points", m.scale().size()},
                 {"repeated_pairs", m.repeated_pairs().size()}};
    std::cout << summary.dump() << '\n';
    return kExitOk;
}

int cmd_synth(const ordagg::SynthConfig& cfg, const std::string& out_dir) {
    ordagg::SynthResult result = ordagg::synth_generate(cfg);
    fs::create_directories(out_dir);
    ordagg::export_csv(result.matrix, (fs::path(out_dir) / "dataset.csv").string());
    ordagg::manifest_for(result.matrix).save((fs::path(out_dir) / "manifest.json").string());
    write_truth_csv(result, fs::path(out_dir) / "truth.csv");
    json summary{{"units", result.matrix.num_units()},
                 {"workers", result.matrix.num_workers()},
                 {"out", out_dir}};
    std::cout << summary.dump() << '\n';
    return kExitOk;
}

int cmd_coarsen(const std::string& csv, const std::string& manifest, int granularity,
                std::uint64_t seed, const std::string& out_dir) {
    ordagg::FeedbackMatrix m = ordagg::ingest(csv, manifest);
    ordagg::FeedbackMatrix coarse = granularity == 2 ? ordagg::coarsen_binary(m, seed)
                                                     : ordagg::coarsen_5pt(m, seed);
    fs::create_directories(out_dir);
    ordagg::export_csv(coarse, (fs::path(out_dir) / "dataset.csv").string());
    ordagg::manifest_for(coarse).save((fs::path(out_dir) / "manifest.json").string());
    json summary{{"units", coarse.num_units()},
                 {"workers", coarse.num_workers()},
                 {"scale_points", coarse.scale().size()}};
    std::cout << summary.dump() << '\n';
    return kExitOk;
}

int cmd_stats(const std::string& csv, const std::string& manifest, const std::string& out_csv) {
    ordagg::FeedbackMatrix m = ordagg::ingest(csv, manifest);
    ordagg::NoiseStats s = ordagg::noise_stats(m);
    json summary{{"mean", s.mean},     {"std", s.stddev}, {"min", s.min}, {"p25", s.p25},
                 {"median", s.median}, {"p75", s.p75},    {"max", s.max}};
    std::cout << summary.dump() << '\n';
    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        if (!out) throw std::runtime_error("cannot write " + out_csv);
        out << "worker_id,delta\n";
        for (std::size_t w = 0; w < m.num_workers(); ++w)
            out << m.worker_ids()[w] << ',' << ordagg::detail::fmt_double(s.delta_by_worker[w])
                << '\n';
    }
    return kExitOk;
}

int cmd_match(const std::string& curves_csv, const std::string& ref, const std::string& challenger,
              int grid, int resamples, double confidence, std::uint64_t seed,
              const std::string& out_csv) {
    std::vector<ordagg::LossCurve> curves = ordagg::load_loss_curves_csv(curves_csv);
    const ordagg::LossCurve* ref_curve = nullptr;
    const ordagg::LossCurve* chal_curve = nullptr;
    for (const auto& c : curves) {
        if (c.policy == ref) ref_curve = &c;
        if (c.policy == challenger) chal_curve = &c;
    }
    if (ref_curve == nullptr || chal_curve == nullptr)
        throw ordagg::DataError("curves file does not contain both policies \"" + ref +
                                "\" and \"" + challenger + "\"");
    ordagg::BootstrapConfig boot{resamples, confidence, seed};
    ordagg::MatchingCurve mc = ordagg::matching_curve(*ref_curve, *chal_curve, grid, boot);
    if (!out_csv.empty()) ordagg::detail::write_matching_csv(out_csv, mc);
    json summary{{"grid_min", mc.grid.front()},
                 {"grid_max", mc.grid.back()},
                 {"k_required_at_max", mc.k_required.back()},
                 {"advantage_at_max", ordagg::advantage(mc.grid.back(), mc.k_required.back())}};
    std::cout << summary.dump() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ordinal feedback aggregation experiments"};
    app.require_subcommand(1);

    // --- ingest ---
    auto* ingest = app.add_subcommand("ingest", "validate a dataset and write canonical files");
    std::string in_csv, in_manifest, out_dir;
    ingest->add_option("--data", in_csv, "long-format CSV (unit_id,worker_id,score)")->required();
    ingest->add_option("--manifest", in_manifest, "JSON manifest")->required();
    ingest->add_option("--out", out_dir, "directory for canonical copies");

    // --- synth ---
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with known truth");
    ordagg::SynthConfig synth_cfg;
    std::string synth_out = "synth_out";
    synth->add_option("--units", synth_cfg.num_units, "task units");
    synth->add_option("--workers", synth_cfg.num_workers, "workers");
    synth->add_option("--location-spread", synth_cfg.unit_location_spread, "unit location spread");
    synth->add_option("--polarization-spread", synth_cfg.unit_polarization_spread,
                      "unit polarization spread");
    synth->add_option("--bias-spread", synth_cfg.worker_bias_spread, "worker bias spread");
    synth->add_option("--noise-spread", synth_cfg.worker_noise_spread, "worker noise spread");
    synth->add_option("--seed", synth_cfg.seed, "generator seed");
    synth->add_option("--out", synth_out, "output directory");

    // --- coarsen ---
    auto* coarsen = app.add_subcommand("coarsen", "coarsen a dataset to 2 or 5 points");
    std::string co_csv, co_manifest, co_out = "coarsened";
    int co_granularity = 2;
    std::uint64_t co_seed = 0;
    coarsen->add_option("--data", co_csv)->required();
    coarsen->add_option("--manifest", co_manifest)->required();
    coarsen->add_option("--granularity", co_granularity, "2 or 5")
        ->check(CLI::IsMember({2, 5}));
    coarsen->add_option("--seed", co_seed, "tie-break / mapping seed");
    coarsen->add_option("--out", co_out, "output directory");

    // --- stats ---
    auto* stats = app.add_subcommand("stats", "rater noise statistics from repeated units");
    std::string st_csv, st_manifest, st_out;
    stats->add_option("--data", st_csv)->required();
    stats->add_option("--manifest", st_manifest)->required();
    stats->add_option("--out", st_out, "per-worker delta CSV");

    // --- run ---
    auto* run = app.add_subcommand("run", "full experiment: tune, train, evaluate, match");
    std::string run_config_file;
    std::string run_data, run_manifest;
    std::string run_policies = "regavg,sl";
    std::string run_loss = "cumlog";
    std::string run_gamma_grid;
    bool run_synth = false;
    ordagg::SynthConfig run_synth_cfg;
    int run_k_min = 2, run_k_max = 18, run_train_envs = 30, run_eval_envs = 30, run_folds = 5;
    int run_granularity = 11, run_boot_resamples = 1000, run_matching_grid = 100;
    double run_boot_confidence = 0.95;
    std::uint64_t run_seed = 0;
    std::string run_out = "out", run_checkpoints;
    int run_jobs = 1;
    bool run_quiet = false;
    run->add_option("--config", run_config_file, "JSON config file (flags override it)");
    auto* o_data = run->add_option("--data", run_data, "dataset CSV");
    auto* o_manifest = run->add_option("--manifest", run_manifest, "dataset manifest");
    auto* o_synth = run->add_flag("--synth", run_synth, "use a synthetic dataset instead of files");
    auto* o_su = run->add_option("--synth-units", run_synth_cfg.num_units);
    auto* o_sw = run->add_option("--synth-workers", run_synth_cfg.num_workers);
    auto* o_sl = run->add_option("--synth-location-spread", run_synth_cfg.unit_location_spread);
    auto* o_sp =
        run->add_option("--synth-polarization-spread", run_synth_cfg.unit_polarization_spread);
    auto* o_sb = run->add_option("--synth-bias-spread", run_synth_cfg.worker_bias_spread);
    auto* o_sn = run->add_option("--synth-noise-spread", run_synth_cfg.worker_noise_spread);
    auto* o_ss = run->add_option("--synth-seed", run_synth_cfg.seed);
    auto* o_gran = run->add_option("--granularity", run_granularity,
                                   "2, 5 or the dataset scale size");
    auto* o_pol = run->add_option("--policies", run_policies, "comma list of regavg,sl,slb");
    auto* o_loss = run->add_option("--loss", run_loss, "cumlog|stdlog|pref1|pref2");
    auto* o_kmin = run->add_option("--k-min", run_k_min);
    auto* o_kmax = run->add_option("--k-max", run_k_max);
    auto* o_tenv = run->add_option("--train-envs", run_train_envs);
    auto* o_eenv = run->add_option("--eval-envs", run_eval_envs);
    auto* o_grid =
        run->add_option("--gamma-grid", run_gamma_grid, "comma list overriding the 0.1..1.0 grid");
    int out_set_size = -1;
    auto* o_oss = run->add_option("--output-set-size", out_set_size, "workers held out as targets");
    int mlp_layers = 0, mlp_hidden = 0, mlp_batch = 0, mlp_patience = 0, mlp_epochs = 0;
    double mlp_lr = 0.0, mlp_wd = 0.0, mlp_dropout = 0.0;
    auto* o_ml = run->add_option("--mlp-hidden-layers", mlp_layers);
    auto* o_mh = run->add_option("--mlp-hidden-size", mlp_hidden);
    auto* o_mb = run->add_option("--mlp-batch-size", mlp_batch);
    auto* o_mp = run->add_option("--mlp-patience", mlp_patience);
    auto* o_me = run->add_option("--mlp-max-epochs", mlp_epochs);
    auto* o_mlr = run->add_option("--mlp-learning-rate", mlp_lr);
    auto* o_mwd = run->add_option("--mlp-weight-decay", mlp_wd);
    auto* o_mdo = run->add_option("--mlp-dropout", mlp_dropout);
    auto* o_folds = run->add_option("--folds", run_folds, "cross-validation folds");
    auto* o_br = run->add_option("--bootstrap-resamples", run_boot_resamples);
    auto* o_bc = run->add_option("--bootstrap-confidence", run_boot_confidence);
    auto* o_mg = run->add_option("--matching-grid", run_matching_grid);
    auto* o_seed = run->add_option("--seed", run_seed, "base seed for every stage");
    run->add_option("--out", run_out, "output directory");
    run->add_option("--checkpoints", run_checkpoints, "directory for trained policy networks");
    run->add_option("--jobs", run_jobs, "worker threads (does not affect results)");
    run->add_flag("--quiet", run_quiet, "suppress progress on stderr");

    // --- match ---
    auto* match = app.add_subcommand("match", "matching curve from a loss-curves CSV");
    std::string ma_csv, ma_ref = "regavg", ma_chal = "sl", ma_out;
    int ma_grid = 100, ma_resamples = 1000;
    double ma_conf = 0.95;
    std::uint64_t ma_seed = 0;
    match->add_option("--curves", ma_csv, "policy,env,k,loss CSV")->required();
    match->add_option("--ref", ma_ref, "reference policy name");
    match->add_option("--challenger", ma_chal, "challenger policy name");
    match->add_option("--grid", ma_grid);
    match->add_option("--bootstrap-resamples", ma_resamples);
    match->add_option("--bootstrap-confidence", ma_conf);
    match->add_option("--seed", ma_seed);
    match->add_option("--out", ma_out, "matching CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest(in_csv, in_manifest, out_dir);
        if (synth->parsed()) return cmd_synth(synth_cfg, synth_out);
        if (coarsen->parsed()) return cmd_coarsen(co_csv, co_manifest, co_granularity, co_seed, co_out);
        if (stats->parsed()) return cmd_stats(st_csv, st_manifest, st_out);
        if (run->parsed()) {
            ordagg::RunConfig cfg;
            if (!run_config_file.empty()) {
                std::ifstream in(run_config_file);
                if (!in) throw ordagg::DataError("cannot open config file: " + run_config_file);
                json j;
                try {
                    in >> j;
                } catch (const json::exception& e) {
                    throw ordagg::DataError(run_config_file + ": " + e.what());
                }
                ordagg::apply_run_config_json(cfg, j);
            }
            // Flags override config-file values, which override defaults.
            if (o_data->count()) cfg.dataset_csv = run_data;
            if (o_manifest->count()) cfg.dataset_manifest = run_manifest;
            const bool any_synth_flag = o_su->count() || o_sw->count() || o_sl->count() ||
                                        o_sp->count() || o_sb->count() || o_sn->count() ||
                                        o_ss->count();
            if (o_synth->count() || (any_synth_flag && cfg.synth)) {
                ordagg::SynthConfig synth = cfg.synth.value_or(ordagg::SynthConfig{});
                if (o_su->count()) synth.num_units = run_synth_cfg.num_units;
                if (o_sw->count()) synth.num_workers = run_synth_cfg.num_workers;
                if (o_sl->count()) synth.unit_location_spread = run_synth_cfg.unit_location_spread;
                if (o_sp->count())
                    synth.unit_polarization_spread = run_synth_cfg.unit_polarization_spread;
                if (o_sb->count()) synth.worker_bias_spread = run_synth_cfg.worker_bias_spread;
                if (o_sn->count()) synth.worker_noise_spread = run_synth_cfg.worker_noise_spread;
                if (o_ss->count()) synth.seed = run_synth_cfg.seed;
                cfg.synth = synth;
            }
            if (o_gran->count()) cfg.granularity = run_granularity;
            if (o_pol->count()) {
                cfg.policies.clear();
                for (auto& piece : ordagg::detail::split_csv_line(run_policies))
                    if (!piece.empty()) cfg.policies.push_back(piece);
            }
            if (o_loss->count()) cfg.loss = ordagg::loss_kind_from_string(run_loss);
            if (o_kmin->count()) cfg.k_min = run_k_min;
            if (o_kmax->count()) cfg.k_max = run_k_max;
            if (o_tenv->count()) cfg.train_environments = run_train_envs;
            if (o_eenv->count()) cfg.eval_environments = run_eval_envs;
            if (o_grid->count()) {
                cfg.gamma_grid.clear();
                for (auto& piece : ordagg::detail::split_csv_line(run_gamma_grid))
                    cfg.gamma_grid.push_back(std::stod(piece));
            }
            if (o_oss->count()) cfg.output_set_size = out_set_size;
            if (o_ml->count()) cfg.mlp_hidden_layers = mlp_layers;
            if (o_mh->count()) cfg.mlp_hidden_size = mlp_hidden;
            if (o_mb->count()) cfg.mlp_batch_size = mlp_batch;
            if (o_mp->count()) cfg.mlp_patience = mlp_patience;
            if (o_me->count()) cfg.mlp_max_epochs = mlp_epochs;
            if (o_mlr->count()) cfg.mlp_learning_rate = mlp_lr;
            if (o_mwd->count()) cfg.mlp_weight_decay = mlp_wd;
            if (o_mdo->count()) cfg.mlp_dropout = mlp_dropout;
            if (o_folds->count()) cfg.folds = run_folds;
            if (o_br->count()) cfg.bootstrap_resamples = run_boot_resamples;
            if (o_bc->count()) cfg.bootstrap_confidence = run_boot_confidence;
            if (o_mg->count()) cfg.matching_grid = run_matching_grid;
            if (o_seed->count()) cfg.seed = run_seed;
            cfg.out_dir = run_out;
            cfg.checkpoint_dir = run_checkpoints;
            cfg.jobs = run_jobs;
            cfg.quiet = run_quiet;
            ordagg::RunOutputs out = ordagg::run_pipeline(cfg);
            json summary{{"results", out.results_json.string()},
                         {"loss_curves", out.loss_curves_csv.string()}};
            std::cout << summary.dump() << '\n';
            return kExitOk;
        }
        if (match->parsed())
            return cmd_match(ma_csv, ma_ref, ma_chal, ma_grid, ma_resamples, ma_conf, ma_seed,
                             ma_out);
    } catch (const ordagg::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitInternal;
}
