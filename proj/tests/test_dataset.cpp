#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "ncofdm/dataset.hpp"

using namespace ncofdm;
using namespace ncofdm::dataset;

namespace {

GenConfig small_config() {
    GenConfig cfg;
    cfg.n = 16;
    cfg.n1 = 32;
    cfg.delta_f_grid = {15000.0};
    cfg.pattern.family = waveform::PatternFamily::Random;
    cfg.modulation = waveform::Modulation::Bpsk;
    cfg.snr_db = 10.0;
    cfg.rows = 1000;
    cfg.seed = 7;
    cfg.labels = LabelSchema::Occupancy;
    return cfg;
}

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// 99th percentile of the chi-squared distribution by degrees of freedom.
double chi2_99(int df) {
    static const std::map<int, double> table{
        {5, 15.086},  {6, 16.812},  {7, 18.475},  {8, 20.090},  {9, 21.666},
        {10, 23.209}, {11, 24.725}, {12, 26.217}, {13, 27.688}, {14, 29.141},
        {15, 30.578}, {16, 32.000}, {17, 33.409}};
    return table.at(df);
}

}  // namespace

TEST_CASE("generation is deterministic and thread-count invariant", "[dataset]") {
    auto cfg = small_config();
    cfg.rows = 400;
    const auto a = build_dataset(cfg);
    const auto b = build_dataset(cfg);
    REQUIRE(a.x == b.x);
    REQUIRE(a.labels_f == b.labels_f);

    auto cfg2 = cfg;
    cfg2.threads = 2;
    const auto c = build_dataset(cfg2);
    REQUIRE(a.x == c.x);
    REQUIRE(a.labels_f == c.labels_f);
}

TEST_CASE("saved datasets are byte identical across runs", "[dataset]") {
    auto cfg = small_config();
    cfg.rows = 200;
    const auto dir1 = std::filesystem::temp_directory_path() / "ncofdm_ds_a";
    const auto dir2 = std::filesystem::temp_directory_path() / "ncofdm_ds_b";
    save_dataset(dir1, build_dataset(cfg));
    save_dataset(dir2, build_dataset(cfg));
    for (const char* f : {"manifest.json", "data.f32le", "labels.f32le"})
        REQUIRE(file_bytes(dir1 / f) == file_bytes(dir2 / f));
}

TEST_CASE("active-count histogram is binomial", "[dataset]") {
    auto cfg = small_config();
    cfg.rows = 4000;
    const auto ds = build_dataset(cfg);

    std::vector<long> counts(cfg.n + 1, 0);
    for (long r = 0; r < ds.rows(); ++r) {
        int na = 0;
        for (int i = 0; i < cfg.n; ++i) na += ds.labels_f(i, r) > 0.5f ? 1 : 0;
        ++counts[na];
    }

    // Binomial(16, 0.5) expected counts; the all-zero draw is redrawn, so
    // its mass is zero.
    std::vector<double> expected(cfg.n + 1, 0.0);
    double choose = 1.0;
    for (int k = 0; k <= cfg.n; ++k) {
        expected[k] = choose * std::pow(0.5, cfg.n) * ds.rows();
        choose *= static_cast<double>(cfg.n - k) / (k + 1);
    }
    expected[0] = 0.0;

    // Merge low-expectation tails, then Pearson chi-squared at the 1% level.
    double chi2 = 0.0;
    int df = -1;
    double merged_obs = 0.0, merged_exp = 0.0;
    for (int k = 0; k <= cfg.n; ++k) {
        merged_obs += counts[k];
        merged_exp += expected[k];
        if (merged_exp >= 5.0) {
            chi2 += (merged_obs - merged_exp) * (merged_obs - merged_exp) / merged_exp;
            ++df;
            merged_obs = merged_exp = 0.0;
        }
    }
    if (merged_exp > 0.0) {
        chi2 += (merged_obs - merged_exp) * (merged_obs - merged_exp) / merged_exp;
        ++df;
    }
    REQUIRE(chi2 < chi2_99(df));
}

TEST_CASE("noise-only rows carry N0 energy", "[dataset]") {
    auto cfg = small_config();
    cfg.labels = LabelSchema::ClassIndex;
    cfg.noise_fraction = 1.0;
    cfg.snr_db = 5.0;
    cfg.rows = 3000;
    const double n0 = calibrated_n0(cfg);
    const auto ds = build_dataset(cfg);
    double acc = 0.0;
    for (long r = 0; r < ds.rows(); ++r) acc += ds.x.col(r).cast<double>().squaredNorm() / cfg.n1;
    REQUIRE(acc / ds.rows() == Catch::Approx(n0).epsilon(0.05));
}

TEST_CASE("split is a disjoint exhaustive partition", "[dataset]") {
    auto cfg = small_config();
    cfg.rows = 1000;
    const auto ds = build_dataset(cfg);
    const auto [train, test] = split(ds, 0.8, 99);
    REQUIRE(train.rows() == 800);
    REQUIRE(test.rows() == 200);

    auto col_key = [](const Eigen::MatrixXf& m, long c) {
        return std::string(reinterpret_cast<const char*>(m.col(c).data()),
                           sizeof(float) * m.rows());
    };
    std::multiset<std::string> original, pieces;
    for (long r = 0; r < ds.rows(); ++r) original.insert(col_key(ds.x, r));
    for (long r = 0; r < train.rows(); ++r) pieces.insert(col_key(train.x, r));
    for (long r = 0; r < test.rows(); ++r) pieces.insert(col_key(test.x, r));
    REQUIRE(original == pieces);
}

TEST_CASE("load save round trip is lossless", "[dataset]") {
    auto cfg = small_config();
    cfg.rows = 150;
    const auto ds = build_dataset(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "ncofdm_ds_rt";
    save_dataset(dir, ds);
    const auto back = load_dataset(dir);
    REQUIRE(back.x == ds.x);
    REQUIRE(back.labels_f == ds.labels_f);
    REQUIRE(back.manifest.n == ds.manifest.n);
    REQUIRE(back.manifest.seed == ds.manifest.seed);

    // Saving the loaded copy reproduces the same bytes.
    const auto dir2 = std::filesystem::temp_directory_path() / "ncofdm_ds_rt2";
    save_dataset(dir2, back);
    REQUIRE(file_bytes(dir / "data.f32le") == file_bytes(dir2 / "data.f32le"));
}

TEST_CASE("schema version mismatch is a typed error", "[dataset]") {
    auto cfg = small_config();
    cfg.rows = 10;
    const auto dir = std::filesystem::temp_directory_path() / "ncofdm_ds_schema";
    save_dataset(dir, build_dataset(cfg));

    auto manifest = nlohmann::json::parse(file_bytes(dir / "manifest.json"));
    manifest["schema_version"] = 999;
    std::ofstream(dir / "manifest.json") << manifest.dump(2);
    REQUIRE_THROWS_AS(load_dataset(dir), SchemaError);
}

TEST_CASE("config validation", "[dataset]") {
    auto cfg = small_config();
    cfg.noise_fraction = 0.5;  // occupancy labels cannot describe noise rows
    REQUIRE_THROWS_AS(build_dataset(cfg), std::invalid_argument);
    auto cfg2 = small_config();
    cfg2.rows = 0;
    REQUIRE_THROWS_AS(build_dataset(cfg2), std::invalid_argument);
}

TEST_CASE("config json round trip", "[dataset]") {
    auto cfg = small_config();
    cfg.cases.push_back({5000.0, waveform::Interleaved{4, 1}});
    cfg.cases.push_back({2500.0, waveform::Pattern2{3, 1, 2, 1, 2, 9}});
    const nlohmann::json j = cfg;
    GenConfig back = j.get<GenConfig>();
    const nlohmann::json j2 = back;
    REQUIRE(j == j2);
}
