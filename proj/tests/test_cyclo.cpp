#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <vector>

#include "ncofdm/channel.hpp"
#include "ncofdm/cyclo.hpp"
#include "ncofdm/rng.hpp"
#include "ncofdm/waveform.hpp"

using namespace ncofdm;
using namespace ncofdm::cyclo;
using waveform::cdouble;

namespace {

// Table-row style record: interleaved NC-OFDM with cyclic prefix at 5 dB.
waveform::ComplexFrame example_record(double t_u_s, int q, double t_o_s, int n_samples,
                                      double snr_db, std::uint64_t seed) {
    Rng rng(seed);
    waveform::TransmissionParams p;
    p.n = 64;
    p.delta_f = 1.0 / t_u_s;
    p.pattern = waveform::make_pattern(waveform::Interleaved{q, 0}, 64, rng);
    p.power = waveform::unit_powers(64);
    p.modulation = waveform::Modulation::Bpsk;
    p.t_cp = t_o_s - t_u_s;
    auto record = waveform::synthesize_multisymbol(p, n_samples, 1e-6, rng);
    const double n0 = waveform::mean_power(record) / channel::db_to_linear(snr_db);
    return channel::apply_awgn(record, n0, rng);
}

}  // namespace

TEST_CASE("caf of a constant signal is the zero-padding triangle", "[cyclo]") {
    const int m = 10;
    std::vector<cdouble> ones(m, cdouble(1.0, 0.0));
    const auto grid = estimate_caf(ones, 0.0, -4, 4, 1e-6);

    // Brute-force reference with explicit zero padding.
    for (std::size_t i = 0; i < grid.lags.size(); ++i) {
        const int tau = grid.lags[i];
        cdouble ref(0.0, 0.0);
        for (int n = 0; n < m; ++n) {
            const int j = n - tau;
            if (j >= 0 && j < m) ref += ones[n] * std::conj(ones[j]);
        }
        ref /= static_cast<double>(m);
        REQUIRE(std::abs(grid.values[i] - ref) < 1e-12);
        REQUIRE(std::abs(grid.values[i] - cdouble((m - std::abs(tau)) / double(m), 0.0)) < 1e-12);
    }
}

TEST_CASE("caf of white noise vanishes off the zero lag", "[cyclo]") {
    Rng rng(12345);
    const int m = 1000000;
    std::vector<cdouble> noise(m);
    for (auto& s : noise) s = rng.complex_gaussian(1.0);
    const auto grid = estimate_caf(noise, 0.0, 1, 6, 1e-6);
    for (std::size_t i = 0; i < grid.values.size(); ++i)
        REQUIRE(grid.magnitude(i) <= 3.0 / std::sqrt(static_cast<double>(m)));
}

TEST_CASE("caf at zero lag equals measured power", "[cyclo]") {
    Rng rng(9);
    std::vector<cdouble> r(5000);
    double power = 0.0;
    for (auto& s : r) {
        s = rng.complex_gaussian(3.0);
        power += std::norm(s);
    }
    power /= static_cast<double>(r.size());
    const auto grid = estimate_caf(r, 0.0, 0, 0, 1e-6);
    REQUIRE(grid.values[0].real() == Catch::Approx(power).epsilon(1e-12));
    REQUIRE(grid.values[0].imag() == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("caf is conjugate symmetric at alpha zero", "[cyclo]") {
    Rng rng(31);
    std::vector<cdouble> r(4000);
    for (auto& s : r) s = rng.complex_gaussian(1.0);
    const auto grid = estimate_caf(r, 0.0, -20, 20, 1e-6);
    for (int tau = 1; tau <= 20; ++tau) {
        const auto& neg = grid.values[20 - tau];
        const auto& pos = grid.values[20 + tau];
        REQUIRE(std::abs(neg - std::conj(pos)) < 1e-12);
    }
}

TEST_CASE("caf rejects unusable inputs", "[cyclo]") {
    REQUIRE_THROWS_AS(estimate_caf({}, 0.0, -1, 1, 1e-6), std::invalid_argument);
    std::vector<cdouble> tiny(4, cdouble(1.0, 0.0));
    REQUIRE_THROWS_AS(estimate_caf(tiny, 0.0, -8, 8, 1e-6), std::invalid_argument);

    CafGrid zeros;
    zeros.lags = {0, 1};
    zeros.values = {cdouble(0, 0), cdouble(0, 0)};
    REQUIRE_THROWS_AS(caf_peaks(zeros), std::invalid_argument);
}

TEST_CASE("a single tone leaves only the zero-lag peak", "[cyclo]") {
    const int m = 20000;
    std::vector<cdouble> tone(m);
    for (int k = 0; k < m; ++k) {
        const double phi = 2.0 * std::numbers::pi * 0.037 * k;
        tone[k] = cdouble(std::cos(phi), std::sin(phi));
    }
    const auto grid = estimate_caf(tone, 0.0, -200, 200, 1e-6);
    const auto peaks = caf_peaks(grid, 0.3);
    REQUIRE(peaks == std::vector<int>{0});
}

TEST_CASE("interleaved records peak at multiples of T_u/q", "[cyclo]") {
    // Two parameter draws from the ambiguity sweep; noiseless, short record.
    struct Case {
        double t_u;
        int q;
    };
    for (const Case c : {Case{320e-6, 5}, Case{192e-6, 3}}) {
        Rng rng(55);
        waveform::TransmissionParams p;
        p.n = 64;
        p.delta_f = 1.0 / c.t_u;
        p.pattern = waveform::make_pattern(waveform::Interleaved{c.q, 0}, 64, rng);
        p.power = waveform::unit_powers(64);
        p.t_cp = 384e-6 - c.t_u;
        auto record = waveform::synthesize_multisymbol(p, 40000, 1e-6, rng);
        const auto grid = estimate_caf(record.samples, 0.0, -200, 200, 1e-6);
        const auto peaks = caf_peaks(grid, 0.3);
        REQUIRE(peaks.size() >= 3);
        const double spacing = fundamental_spacing(peaks, 1e-6);
        REQUIRE(spacing == Catch::Approx(c.t_u / c.q).margin(1e-6));
    }
}

TEST_CASE("table-row records share one peak set at 5 dB", "[cyclo]") {
    const auto r1 = example_record(320e-6, 5, 384e-6, 60000, 5.0, 101);
    const auto r2 = example_record(256e-6, 4, 384e-6, 60000, 5.0, 202);
    const auto p1 = caf_peaks(estimate_caf(r1.samples, 0.0, -400, 400, 1e-6), 0.3);
    const auto p2 = caf_peaks(estimate_caf(r2.samples, 0.0, -400, 400, 1e-6), 0.3);
    REQUIRE(p1.size() == p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i) REQUIRE(std::abs(p1[i] - p2[i]) <= 1);
}

TEST_CASE("ambiguity set keeps every consistent candidate", "[cyclo]") {
    const std::vector<int> peaks{-128, -64, 0, 64, 128};
    const std::vector<CandidateParams> table{{320e-6, 5}, {256e-6, 4}, {192e-6, 3}};

    auto hits = ambiguity_set(peaks, 1e-6, table, 1e-6);
    REQUIRE(hits.size() == 3);

    std::vector<CandidateParams> extended = table;
    extended.push_back({128e-6, 2});
    hits = ambiguity_set(peaks, 1e-6, extended, 1e-6);
    REQUIRE(hits.size() == 4);

    const std::vector<int> off_peaks{-100, -50, 0, 50, 100};
    hits = ambiguity_set(off_peaks, 1e-6, table, 1e-6);
    REQUIRE(hits.empty());
}
