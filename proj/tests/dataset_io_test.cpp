#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ordagg/dataset_io.hpp"

using namespace ordagg;
namespace fs = std::filesystem;

namespace {

class DatasetIoTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::path(testing::TempDir()) / ("ordagg_io_" + std::to_string(counter_++));
        fs::create_directories(dir_);
    }

    std::string write(const std::string& name, const std::string& content) {
        const fs::path p = dir_ / name;
        std::ofstream out(p);
        out << content;
        return p.string();
    }

    static std::string read_file(const std::string& path) {
        std::ifstream in(path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
    static int counter_;
};

int DatasetIoTest::counter_ = 0;

const char* kBasicCsv =
    "unit_id,worker_id,score\n"
    "q1,w2,3\n"
    "q1,w1,-5\n"
    "q2,w2,0\n"
    "q2,w1,5\n";

const char* kBasicManifest = R"({"scale": [-5,-4,-3,-2,-1,0,1,2,3,4,5]})";

}  // namespace

TEST_F(DatasetIoTest, IngestOrdersUnitsByAppearanceWorkersSorted) {
    auto csv = write("d.csv", kBasicCsv);
    auto man = write("m.json", kBasicManifest);
    FeedbackMatrix m = ingest(csv, man);
    EXPECT_EQ(m.num_units(), 2u);
    EXPECT_EQ(m.num_workers(), 2u);
    EXPECT_EQ(m.unit_ids(), (std::vector<std::string>{"q1", "q2"}));
    EXPECT_EQ(m.worker_ids(), (std::vector<std::string>{"w1", "w2"}));
    EXPECT_EQ(m.at(0, 0), -5);
    EXPECT_EQ(m.at(0, 1), 3);
    EXPECT_EQ(m.at(1, 0), 5);
    EXPECT_EQ(m.at(1, 1), 0);
}

TEST_F(DatasetIoTest, ExportIngestIsAFixedPoint) {
    auto csv = write("d.csv", kBasicCsv);
    auto man = write("m.json", kBasicManifest);
    FeedbackMatrix m = ingest(csv, man);

    const std::string out_csv = (dir_ / "canonical.csv").string();
    const std::string out_man = (dir_ / "canonical.json").string();
    export_csv(m, out_csv);
    manifest_for(m).save(out_man);
    FeedbackMatrix again = ingest(out_csv, out_man);
    EXPECT_EQ(again.unit_ids(), m.unit_ids());
    EXPECT_EQ(again.worker_ids(), m.worker_ids());
    for (std::size_t t = 0; t < m.num_units(); ++t)
        for (std::size_t w = 0; w < m.num_workers(); ++w) EXPECT_EQ(again.at(t, w), m.at(t, w));

    // Exporting the re-ingested matrix reproduces the file byte for byte.
    const std::string second_csv = (dir_ / "canonical2.csv").string();
    export_csv(again, second_csv);
    EXPECT_EQ(read_file(second_csv), read_file(out_csv));
}

TEST_F(DatasetIoTest, DuplicateEntryNamesTheCulprit) {
    auto csv = write("d.csv",
                     "unit_id,worker_id,score\n"
                     "q1,w1,1\n"
                     "q1,w1,2\n");
    auto man = write("m.json", kBasicManifest);
    try {
        ingest(csv, man);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("q1"), std::string::npos);
        EXPECT_NE(msg.find("w1"), std::string::npos);
        EXPECT_NE(msg.find(":3"), std::string::npos);
    }
}

TEST_F(DatasetIoTest, MissingPairsCountedAndRejected) {
    auto csv = write("d.csv",
                     "unit_id,worker_id,score\n"
                     "q1,w1,1\n"
                     "q1,w2,2\n"
                     "q2,w1,0\n");
    auto man = write("m.json", kBasicManifest);
    try {
        ingest(csv, man);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("1 missing"), std::string::npos);
    }
}

TEST_F(DatasetIoTest, OffScaleScoreRejectedWithLine) {
    auto csv = write("d.csv",
                     "unit_id,worker_id,score\n"
                     "q1,w1,7\n");
    auto man = write("m.json", kBasicManifest);
    try {
        ingest(csv, man);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find(":2"), std::string::npos);
        EXPECT_NE(msg.find("7"), std::string::npos);
    }
}

TEST_F(DatasetIoTest, EmptyOrHeaderOnlyFilesRejected) {
    auto man = write("m.json", kBasicManifest);
    auto empty = write("e.csv", "");
    EXPECT_THROW(ingest(empty, man), DataError);
    auto header_only = write("h.csv", "unit_id,worker_id,score\n");
    EXPECT_THROW(ingest(header_only, man), DataError);
    EXPECT_THROW(ingest((dir_ / "absent.csv").string(), man), DataError);
    auto csv = write("d.csv", kBasicCsv);
    EXPECT_THROW(ingest(csv, (dir_ / "absent.json").string()), DataError);
}

TEST_F(DatasetIoTest, RepeatedPairsFromExplicitList) {
    auto csv = write("d.csv", kBasicCsv);
    auto man = write("m.json",
                     R"({"scale": [-5,-4,-3,-2,-1,0,1,2,3,4,5], "repeated_pairs": [["q2","q1"]]})");
    FeedbackMatrix m = ingest(csv, man);
    ASSERT_EQ(m.repeated_pairs().size(), 1u);
    EXPECT_EQ(m.repeated_pairs()[0], std::make_pair(0, 1));

    auto bad = write("bad.json",
                     R"({"scale": [-5,-4,-3,-2,-1,0,1,2,3,4,5], "repeated_pairs": [["q2","zz"]]})");
    EXPECT_THROW(ingest(csv, bad), DataError);
}

TEST_F(DatasetIoTest, RepeatedPairsDetectedFromIdenticalTexts) {
    auto csv = write("d.csv",
                     "unit_id,worker_id,score\n"
                     "a,w1,1\nb,w1,2\nc,w1,3\n"
                     "a,w2,1\nb,w2,2\nc,w2,3\n");
    auto man = write("m.json",
                     R"({"scale": [-5,-4,-3,-2,-1,0,1,2,3,4,5],
                         "unit_texts": {"a": "same?", "b": "different", "c": "same?"}})");
    FeedbackMatrix m = ingest(csv, man);
    ASSERT_EQ(m.repeated_pairs().size(), 1u);
    EXPECT_EQ(m.repeated_pairs()[0], std::make_pair(0, 2));
}

TEST_F(DatasetIoTest, NoiseStatsHandEvaluated) {
    // Worker w1 answers repeated pairs with (3,3) and (-2,0):
    // delta = (0 + 2) / 2 = 1.
    auto csv = write("d.csv",
                     "unit_id,worker_id,score\n"
                     "a,w1,3\nb,w1,3\nc,w1,-2\nd,w1,0\n"
                     "a,w2,1\nb,w2,1\nc,w2,1\nd,w2,1\n");
    auto man = write("m.json",
                     R"({"scale": [-5,-4,-3,-2,-1,0,1,2,3,4,5],
                         "repeated_pairs": [["a","b"], ["c","d"]]})");
    FeedbackMatrix m = ingest(csv, man);
    NoiseStats s = noise_stats(m);
    EXPECT_DOUBLE_EQ(s.delta_by_worker[0], 1.0);
    EXPECT_DOUBLE_EQ(s.delta_by_worker[1], 0.0);
    EXPECT_DOUBLE_EQ(s.mean, 0.5);
    EXPECT_DOUBLE_EQ(s.min, 0.0);
    EXPECT_DOUBLE_EQ(s.max, 1.0);
    EXPECT_DOUBLE_EQ(s.median, 0.5);
    EXPECT_DOUBLE_EQ(s.p25, 0.25);  // linear interpolation between order stats
    EXPECT_DOUBLE_EQ(s.p75, 0.75);
    EXPECT_DOUBLE_EQ(s.stddev, 0.5);
}

TEST_F(DatasetIoTest, NoiseStatsIdenticalRepeatsAreAllZero) {
    auto csv = write("d.csv",
                     "unit_id,worker_id,score\n"
                     "a,w1,2\nb,w1,2\n"
                     "a,w2,-4\nb,w2,-4\n");
    auto man = write("m.json",
                     R"({"scale": [-5,-4,-3,-2,-1,0,1,2,3,4,5], "repeated_pairs": [["a","b"]]})");
    NoiseStats s = noise_stats(ingest(csv, man));
    EXPECT_DOUBLE_EQ(s.mean, 0.0);
    EXPECT_DOUBLE_EQ(s.max, 0.0);
    EXPECT_DOUBLE_EQ(s.stddev, 0.0);
}

TEST_F(DatasetIoTest, NoiseStatsSummariesRecomputable) {
    Rng rng(47);
    std::ostringstream csv;
    csv << "unit_id,worker_id,score\n";
    for (int u = 0; u < 6; ++u)
        for (int w = 0; w < 9; ++w)
            csv << "u" << u << ",w" << w << ','
                << static_cast<int>(rng.below(11)) - 5 << '\n';
    auto csv_path = write("d.csv", csv.str());
    auto man = write("m.json",
                     R"({"scale": [-5,-4,-3,-2,-1,0,1,2,3,4,5],
                         "repeated_pairs": [["u0","u3"], ["u1","u4"], ["u2","u5"]]})");
    NoiseStats s = noise_stats(ingest(csv_path, man));
    std::vector<double> sorted = s.delta_by_worker;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_NEAR(s.mean, mean_of(sorted), 1e-12);
    EXPECT_NEAR(s.stddev, stddev_pop(sorted), 1e-12);
    EXPECT_NEAR(s.p25, percentile_sorted(sorted, 0.25), 1e-12);
    EXPECT_NEAR(s.median, percentile_sorted(sorted, 0.5), 1e-12);
    EXPECT_NEAR(s.p75, percentile_sorted(sorted, 0.75), 1e-12);
    EXPECT_DOUBLE_EQ(s.min, sorted.front());
    EXPECT_DOUBLE_EQ(s.max, sorted.back());
}

TEST_F(DatasetIoTest, NoiseStatsRequiresRepeats) {
    auto csv = write("d.csv", kBasicCsv);
    auto man = write("m.json", kBasicManifest);
    EXPECT_THROW(noise_stats(ingest(csv, man)), std::invalid_argument);
}

TEST_F(DatasetIoTest, ManifestRoundTrip) {
    DatasetManifest m;
    m.scale_labels = {-2, -1, 0, 1, 2};
    m.repeated_pairs = {{"a", "b"}};
    m.split_seed = 42;
    const std::string path = (dir_ / "man.json").string();
    m.save(path);
    DatasetManifest back = DatasetManifest::load(path);
    EXPECT_EQ(back.scale_labels, m.scale_labels);
    EXPECT_EQ(back.repeated_pairs, m.repeated_pairs);
    ASSERT_TRUE(back.split_seed.has_value());
    EXPECT_EQ(*back.split_seed, 42u);
}
