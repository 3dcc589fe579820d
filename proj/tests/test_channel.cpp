#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <vector>

#include "ncofdm/channel.hpp"
#include "ncofdm/rng.hpp"
#include "ncofdm/waveform.hpp"

using namespace ncofdm;
using namespace ncofdm::channel;
using waveform::cdouble;
using waveform::ComplexFrame;

namespace {

ComplexFrame zero_frame(int n, double t_s = 1e-6) {
    ComplexFrame f;
    f.t_s = t_s;
    f.samples.assign(n, cdouble(0.0, 0.0));
    return f;
}

ComplexFrame random_frame(int n, Rng& rng, double t_s = 1e-6) {
    ComplexFrame f;
    f.t_s = t_s;
    f.samples.resize(n);
    for (auto& s : f.samples) s = rng.complex_gaussian(2.0);
    return f;
}

}  // namespace

TEST_CASE("awgn with zero noise density is the identity", "[channel]") {
    Rng rng(1);
    const auto f = random_frame(64, rng);
    const auto out = apply_awgn(f, 0.0, rng);
    REQUIRE(out.samples == f.samples);
}

TEST_CASE("awgn per-dimension variance is N0/2", "[channel]") {
    Rng rng(42);
    const int n = 100000;
    const auto out = apply_awgn(zero_frame(n), 1.0, rng);
    double re2 = 0.0, im2 = 0.0;
    for (const auto& s : out.samples) {
        re2 += s.real() * s.real();
        im2 += s.imag() * s.imag();
    }
    REQUIRE(re2 / n == Catch::Approx(0.5).epsilon(0.01));
    REQUIRE(im2 / n == Catch::Approx(0.5).epsilon(0.01));
}

TEST_CASE("awgn is deterministic for a fixed seed", "[channel]") {
    Rng a(7), b(7), src(3);
    const auto f = random_frame(32, src);
    REQUIRE(apply_awgn(f, 0.3, a).samples == apply_awgn(f, 0.3, b).samples);
}

TEST_CASE("multipath identity tap passes the frame through", "[channel]") {
    Rng rng(2);
    const auto f = random_frame(40, rng);
    const auto out = apply_multipath(f, {1.0}, {0.0}, f.t_s);
    for (int k = 0; k < f.size(); ++k) REQUIRE(std::abs(out.samples[k] - f.samples[k]) < 1e-15);
}

TEST_CASE("multipath impulse response lands on the tap delays", "[channel]") {
    auto f = zero_frame(8, 1e-6);
    f.samples[0] = cdouble(1.0, 0.0);
    const auto out = apply_multipath(f, {1.0, 0.8, 0.6}, {0.0, 2e-6, 4e-6}, f.t_s);
    const std::vector<double> expected{1.0, 0.0, 0.8, 0.0, 0.6, 0.0, 0.0, 0.0};
    for (int k = 0; k < 8; ++k) {
        REQUIRE(out.samples[k].real() == Catch::Approx(expected[k]).margin(1e-12));
        REQUIRE(out.samples[k].imag() == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("multipath is linear in the input", "[channel]") {
    Rng rng(5);
    const std::vector<double> amps{1.0, 0.5, -0.25};
    const std::vector<double> delays{0.0, 1e-6, 3e-6};
    for (int trial = 0; trial < 5; ++trial) {
        const auto x = random_frame(50, rng);
        const auto y = random_frame(50, rng);
        const double a = rng.uniform(-2.0, 2.0);
        const double b = rng.uniform(-2.0, 2.0);
        ComplexFrame mix = x;
        for (int k = 0; k < 50; ++k) mix.samples[k] = a * x.samples[k] + b * y.samples[k];
        const auto lhs = apply_multipath(mix, amps, delays, 1e-6);
        const auto cx = apply_multipath(x, amps, delays, 1e-6);
        const auto cy = apply_multipath(y, amps, delays, 1e-6);
        for (int k = 0; k < 50; ++k)
            REQUIRE(std::abs(lhs.samples[k] - (a * cx.samples[k] + b * cy.samples[k])) < 1e-12);
    }
}

TEST_CASE("multipath rejects off-grid delays", "[channel]") {
    Rng rng(2);
    const auto f = random_frame(16, rng);
    REQUIRE_THROWS_AS(apply_multipath(f, {1.0, 0.5}, {0.0, 1.5e-6}, 1e-6), std::invalid_argument);
}

TEST_CASE("rayleigh gain is unit second moment and invertible", "[channel]") {
    Rng rng(11);
    double acc = 0.0;
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) acc += std::norm(rng.complex_gaussian(1.0));
    REQUIRE(acc / trials == Catch::Approx(1.0).epsilon(0.01));

    const auto f = random_frame(24, rng);
    auto [faded, h] = apply_rayleigh_flat(f, rng);
    for (int k = 0; k < 24; ++k)
        REQUIRE(std::abs(faded.samples[k] / h - f.samples[k]) < 1e-12);

    Rng a(9), b(9);
    const auto ga = apply_rayleigh_flat(f, a).second;
    const auto gb = apply_rayleigh_flat(f, b).second;
    REQUIRE(ga == gb);
}

TEST_CASE("link budget rate factor and snr", "[channel]") {
    Rng rng(3);
    using namespace ncofdm::waveform;

    TransmissionParams p;
    p.n = 64;
    p.delta_f = 1000.0;
    p.pattern = make_pattern(Interleaved{4, 0}, 64, rng);
    REQUIRE(p.pattern.active_count() == 16);
    p.power = unit_powers(64);
    p.modulation = Modulation::Bpsk;
    const auto frame = synthesize(p, std::vector<cdouble>(16, cdouble(1.0, 0.0)), 64,
                                  p.t_useful() / 64);
    const auto lb = link_budget(p, frame, 1.0);
    REQUIRE(lb.q == Catch::Approx(0.25));
    REQUIRE(lb.eb_n0 * lb.q == Catch::Approx(lb.snr));
    REQUIRE(lb.snr == Catch::Approx(mean_power(frame)));

    TransmissionParams ofdm = p;
    ofdm.pattern = make_pattern(Ofdm{}, 64, rng);
    const auto frame2 = synthesize(ofdm, std::vector<cdouble>(64, cdouble(1.0, 0.0)), 64,
                                   ofdm.t_useful() / 64);
    const auto lb2 = link_budget(ofdm, frame2, 1.0);
    REQUIRE(lb2.q == Catch::Approx(1.0));
    REQUIRE(lb2.eb_n0 == Catch::Approx(lb2.snr));
}

TEST_CASE("requested snr is met on ensemble average", "[channel]") {
    using namespace ncofdm::waveform;
    const double target_db = 7.0;
    const int n = 16;

    // Probe pass fixes N0 from the average signal power, then a fresh batch
    // of frames is measured against it.
    auto gen_frame = [&](Rng& rng) {
        TransmissionParams p;
        p.n = n;
        p.delta_f = 15000.0;
        p.pattern = make_pattern(RandomOcc{0.5}, n, rng);
        p.power = random_powers(n, rng);
        p.modulation = Modulation::Bpsk;
        const auto sym = modulate(random_bits(p.pattern.active_count(), rng), Modulation::Bpsk);
        return synthesize(p, sym, n, p.t_useful() / n);
    };

    Rng probe_rng(1000);
    double probe_es = 0.0;
    for (int i = 0; i < 2000; ++i) probe_es += mean_power(gen_frame(probe_rng));
    probe_es /= 2000.0;
    const double n0 = probe_es / db_to_linear(target_db);

    Rng rng(2000);
    double mean_es = 0.0;
    const int frames = 10000;
    for (int i = 0; i < frames; ++i) mean_es += mean_power(gen_frame(rng));
    mean_es /= frames;
    const double measured_db = linear_to_db(mean_es / n0);
    REQUIRE(measured_db == Catch::Approx(target_db).margin(0.1));
}
