#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ordagg/feedback.hpp"
#include "ordagg/stats.hpp"

namespace ordagg {

/// Companion metadata for a canonical dataset CSV: the scale, optional
/// task texts (repeated units are detected by identical text), an explicit
/// repeated-pair list used when texts are absent, and the worker-split seed.
struct DatasetManifest {
    std::vector<int> scale_labels;
    std::vector<std::pair<std::string, std::string>> repeated_pairs;
    std::map<std::string, std::string> unit_texts;
    std::optional<std::uint64_t> split_seed;

    static DatasetManifest load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open manifest: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("manifest " + path + ": " + e.what());
        }
        DatasetManifest m;
        if (!j.contains("scale") || !j["scale"].is_array())
            throw DataError("manifest " + path + ": missing \"scale\" array");
        for (const auto& v : j["scale"]) m.scale_labels.push_back(v.get<int>());
        if (j.contains("repeated_pairs")) {
            for (const auto& p : j["repeated_pairs"]) {
                if (!p.is_array() || p.size() != 2)
                    throw DataError("manifest " + path + ": repeated_pairs entries must be 2-element arrays");
                m.repeated_pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
            }
        }
        if (j.contains("unit_texts"))
            for (const auto& [k, v] : j["unit_texts"].items())
                m.unit_texts[k] = v.get<std::string>();
        if (j.contains("split_seed")) m.split_seed = j["split_seed"].get<std::uint64_t>();
        return m;
    }

    void save(const std::string& path) const {
        nlohmann::json j;
        j["scale"] = scale_labels;
        j["repeated_pairs"] = nlohmann::json::array();
        for (const auto& [a, b] : repeated_pairs) j["repeated_pairs"].push_back({a, b});
        if (!unit_texts.empty()) j["unit_texts"] = unit_texts;
        if (split_seed) j["split_seed"] = *split_seed;
        std::ofstream out(path);
        if (!out) throw DataError("cannot write manifest: " + path);
        out << j.dump(2) << '\n';
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

/// Read a long-format dataset (header `unit_id,worker_id,score`) plus its
/// manifest into a FeedbackMatrix. Units are ordered by first appearance,
/// workers by sorted id; every (unit, worker) pair must appear exactly once.
inline FeedbackMatrix ingest(const std::string& csv_path, const std::string& manifest_path) {
    const DatasetManifest manifest = DatasetManifest::load(manifest_path);
    OrdinalScale scale(manifest.scale_labels);

    std::ifstream in(csv_path);
    if (!in) throw DataError("cannot open dataset: " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(csv_path + ": empty file");
    {
        auto header = detail::split_csv_line(line);
        if (header != std::vector<std::string>{"unit_id", "worker_id", "score"})
            throw DataError(csv_path + ":1: expected header unit_id,worker_id,score");
    }

    std::vector<std::string> unit_order;
    std::map<std::string, int> unit_index;
    std::set<std::string> worker_set;
    struct Row {
        std::string unit, worker;
        int score;
        std::size_t line_no;
    };
    std::vector<Row> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            throw DataError(csv_path + ":" + std::to_string(line_no) + ": expected 3 fields");
        int score = 0;
        try {
            std::size_t pos = 0;
            score = std::stoi(fields[2], &pos);
            if (pos != fields[2].size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw DataError(csv_path + ":" + std::to_string(line_no) + ": bad score \"" +
                            fields[2] + "\"");
        }
        if (!scale.contains(score))
            throw DataError(csv_path + ":" + std::to_string(line_no) + ": score " +
                            std::to_string(score) + " is not on the manifest scale");
        if (unit_index.find(fields[0]) == unit_index.end()) {
            unit_index[fields[0]] = static_cast<int>(unit_order.size());
            unit_order.push_back(fields[0]);
        }
        worker_set.insert(fields[1]);
        rows.push_back({fields[0], fields[1], score, line_no});
    }
    if (rows.empty()) throw DataError(csv_path + ": no data rows");

    std::vector<std::string> worker_order(worker_set.begin(), worker_set.end());
    std::map<std::string, int> worker_index;
    for (std::size_t i = 0; i < worker_order.size(); ++i)
        worker_index[worker_order[i]] = static_cast<int>(i);

    const std::size_t T = unit_order.size();
    const std::size_t W = worker_order.size();
    std::vector<int> scores(T * W, 0);
    std::vector<std::uint8_t> seen(T * W, 0);
    for (const Row& r : rows) {
        const std::size_t idx = static_cast<std::size_t>(unit_index[r.unit]) * W +
                                static_cast<std::size_t>(worker_index[r.worker]);
        if (seen[idx])
            throw DataError(csv_path + ":" + std::to_string(r.line_no) + ": duplicate entry for unit_id=" +
                            r.unit + ", worker_id=" + r.worker);
        seen[idx] = 1;
        scores[idx] = r.score;
    }
    const std::size_t holes =
        static_cast<std::size_t>(std::count(seen.begin(), seen.end(), std::uint8_t{0}));
    if (holes > 0)
        throw DataError(csv_path + ": " + std::to_string(holes) +
                        " missing (unit, worker) pairs; datasets must be complete");

    // Repeated units: identical task text wins; otherwise the manifest's
    // explicit pair list.
    std::vector<std::pair<int, int>> pairs;
    if (!manifest.unit_texts.empty()) {
        std::map<std::string, std::vector<int>> by_text;
        for (std::size_t t = 0; t < T; ++t) {
            auto it = manifest.unit_texts.find(unit_order[t]);
            if (it == manifest.unit_texts.end())
                throw DataError("manifest: unit_texts missing unit_id " + unit_order[t]);
            by_text[it->second].push_back(static_cast<int>(t));
        }
        for (const auto& [text, ts] : by_text)
            for (std::size_t i = 0; i < ts.size(); ++i)
                for (std::size_t j = i + 1; j < ts.size(); ++j)
                    pairs.emplace_back(ts[i], ts[j]);
    } else {
        for (const auto& [a, b] : manifest.repeated_pairs) {
            auto ia = unit_index.find(a);
            auto ib = unit_index.find(b);
            if (ia == unit_index.end() || ib == unit_index.end())
                throw DataError("manifest: repeated pair references unknown unit_id (" + a + ", " +
                                b + ")");
            int lo = std::min(ia->second, ib->second);
            int hi = std::max(ia->second, ib->second);
            if (lo == hi) throw DataError("manifest: repeated pair must name two distinct units");
            pairs.emplace_back(lo, hi);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    return FeedbackMatrix(std::move(scores), T, W, std::move(scale), std::move(unit_order),
                          std::move(worker_order), std::move(pairs));
}

/// Write the canonical CSV (units in stored order, workers in column
/// order). Ingesting the output reproduces the matrix exactly.
inline void export_csv(const FeedbackMatrix& m, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw DataError("cannot write dataset: " + csv_path);
    out << "unit_id,worker_id,score\n";
    for (std::size_t t = 0; t < m.num_units(); ++t)
        for (std::size_t w = 0; w < m.num_workers(); ++w)
            out << m.unit_ids()[t] << ',' << m.worker_ids()[w] << ',' << m.at(t, w) << '\n';
}

inline DatasetManifest manifest_for(const FeedbackMatrix& m,
                                    std::optional<std::uint64_t> split_seed = std::nullopt) {
    DatasetManifest manifest;
    manifest.scale_labels = m.scale().raw_labels();
    for (auto [a, b] : m.repeated_pairs())
        manifest.repeated_pairs.emplace_back(m.unit_ids()[static_cast<std::size_t>(a)],
                                             m.unit_ids()[static_cast<std::size_t>(b)]);
    manifest.split_seed = split_seed;
    return manifest;
}

/// Mean absolute score change across repeated task units, per worker, on
/// raw labels, with the usual summary statistics.
struct NoiseStats {
    std::vector<double> delta_by_worker;
    double mean = 0.0, stddev = 0.0, min = 0.0, p25 = 0.0, median = 0.0, p75 = 0.0, max = 0.0;
};

inline NoiseStats noise_stats(const FeedbackMatrix& m) {
    const auto& pairs = m.repeated_pairs();
    if (pairs.empty())
        throw std::invalid_argument("noise_stats: dataset has no repeated task units");
    NoiseStats s;
    s.delta_by_worker.resize(m.num_workers());
    for (std::size_t w = 0; w < m.num_workers(); ++w) {
        double acc = 0.0;
        for (auto [a, b] : pairs)
            acc += std::abs(m.at(static_cast<std::size_t>(a), w) -
                            m.at(static_cast<std::size_t>(b), w));
        s.delta_by_worker[w] = acc / static_cast<double>(pairs.size());
    }
    std::vector<double> sorted = s.delta_by_worker;
    std::sort(sorted.begin(), sorted.end());
    s.mean = mean_of(sorted);
    s.stddev = stddev_pop(sorted);
    s.min = sorted.front();
    s.p25 = percentile_sorted(sorted, 0.25);
    s.median = percentile_sorted(sorted, 0.50);
    s.p75 = percentile_sorted(sorted, 0.75);
    s.max = sorted.back();
    return s;
}

}  // namespace ordagg
