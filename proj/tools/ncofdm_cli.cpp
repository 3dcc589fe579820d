// ncofdm: command-line front end for dataset generation, cyclic analysis,
// model training, disentanglement metrics and spoofing BER experiments.
//
// Every subcommand resolves its configuration (flags > --config JSON >
// defaults), writes its artifacts atomically under --out, and drops a
// run.json describing exactly what produced them. Reruns with the same
// configuration and seed produce byte-identical CSV output.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ncofdm/attack.hpp"
#include "ncofdm/channel.hpp"
#include "ncofdm/cyclo.hpp"
#include "ncofdm/dataset.hpp"
#include "ncofdm/metrics.hpp"
#include "ncofdm/nn.hpp"
#include "ncofdm/rng.hpp"
#include "ncofdm/vae.hpp"
#include "ncofdm/waveform.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ncofdm;

namespace {

constexpr const char* kVersion = "0.1.0";

struct GlobalOptions {
    std::uint64_t seed = 0;
    int threads = 2;
    std::string out;
    std::string profile = "desk";
    std::string config_path;
};

void atomic_write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    ncofdm::dataset::detail::atomic_write(path, text.data(), text.size());
}

void write_run_record(const GlobalOptions& g, const std::string& subcommand, const json& config) {
    json run{{"subcommand", subcommand},
             {"seed", g.seed},
             {"threads", g.threads},
             {"profile", g.profile},
             {"config", config},
             {"versions", {{"ncofdm", kVersion}, {"dataset_schema", dataset::kSchemaVersion}}}};
    atomic_write_text(fs::path(g.out) / "run.json", run.dump(2) + "\n");
}

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file: " + path);
    return json::parse(is);
}

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void write_ber_csv(const fs::path& path, const std::vector<attack::BerPoint>& points) {
    std::ostringstream os;
    os << "eb_n0_db,ber,ci_low,ci_high\n";
    for (const auto& p : points)
        os << csv_double(p.ebn0_db) << ',' << csv_double(p.ber) << ',' << csv_double(p.ci_lo)
           << ',' << csv_double(p.ci_hi) << '\n';
    atomic_write_text(path, os.str());
}

// The three interleaved transmissions of the timing-ambiguity case study.
struct AmbiguityCase {
    double t_u_s;
    int q;
};
const AmbiguityCase kTableCases[3] = {{320e-6, 5}, {256e-6, 4}, {192e-6, 3}};

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

int cmd_gen(const GlobalOptions& g, const json& file_cfg, CLI::App* cmd, dataset::GenConfig& cfg,
            double split_fraction) {
    if (!file_cfg.empty()) {
        dataset::GenConfig from_file = file_cfg.get<dataset::GenConfig>();
        auto keep = [&](auto member, const char* flag) {
            if (cmd->count(flag) == 0) cfg.*member = from_file.*member;
        };
        keep(&dataset::GenConfig::n, "--n");
        keep(&dataset::GenConfig::n1, "--n1");
        keep(&dataset::GenConfig::t_s, "--ts");
        keep(&dataset::GenConfig::snr_db, "--snr-db");
        keep(&dataset::GenConfig::noiseless, "--noiseless");
        keep(&dataset::GenConfig::noise_fraction, "--noise-fraction");
        keep(&dataset::GenConfig::rows, "--rows");
        keep(&dataset::GenConfig::random_power, "--random-power");
        if (cmd->count("--delta-f-khz") == 0) cfg.delta_f_grid = from_file.delta_f_grid;
        if (cmd->count("--pattern") == 0) cfg.pattern = from_file.pattern;
        if (cmd->count("--modulation") == 0) cfg.modulation = from_file.modulation;
        if (cmd->count("--channel") == 0) cfg.chan = from_file.chan;
        if (cmd->count("--labels") == 0) cfg.labels = from_file.labels;
        cfg.cases = from_file.cases;
    }
    cfg.seed = g.seed;
    cfg.threads = g.threads;

    const auto ds = dataset::build_dataset(cfg);
    if (split_fraction > 0.0) {
        const auto [train, test] = dataset::split(ds, split_fraction, derive_seed(g.seed, 999));
        dataset::save_dataset(fs::path(g.out) / "train", train);
        dataset::save_dataset(fs::path(g.out) / "test", test);
    } else {
        dataset::save_dataset(fs::path(g.out) / "data", ds);
    }
    write_run_record(g, "gen", json(cfg));
    return 0;
}

// ---------------------------------------------------------------------------
// caf
// ---------------------------------------------------------------------------

int cmd_caf(const GlobalOptions& g, int case_index, double tu_us, int q, double t0_us,
            double snr_db, long samples, int lag_max, double ts_us) {
    if (case_index >= 1 && case_index <= 3) {
        tu_us = kTableCases[case_index - 1].t_u_s * 1e6;
        q = kTableCases[case_index - 1].q;
    }
    if (tu_us <= 0.0 || q < 1) throw std::invalid_argument("caf: need a case or --tu-us and --q");

    Rng rng(g.seed);
    waveform::TransmissionParams p;
    p.n = 64;
    p.delta_f = 1.0 / (tu_us * 1e-6);
    p.pattern = waveform::make_pattern(waveform::Interleaved{q, 0}, 64, rng);
    p.power = waveform::unit_powers(64);
    p.t_cp = (t0_us - tu_us) * 1e-6;
    auto record = waveform::synthesize_multisymbol(p, static_cast<int>(samples), ts_us * 1e-6, rng);
    if (snr_db < 1e9) {
        const double n0 = waveform::mean_power(record) / channel::db_to_linear(snr_db);
        record = channel::apply_awgn(record, n0, rng);
    }
    const auto grid = cyclo::estimate_caf(record.samples, 0.0, -lag_max, lag_max, ts_us * 1e-6);

    std::ostringstream os;
    os << "tau_seconds,magnitude\n";
    for (std::size_t i = 0; i < grid.lags.size(); ++i)
        os << csv_double(grid.lags[i] * grid.t_s) << ',' << csv_double(grid.magnitude(i)) << '\n';
    atomic_write_text(fs::path(g.out) / "caf.csv", os.str());

    const auto peaks = cyclo::caf_peaks(grid, 0.3);
    json config{{"tu_us", tu_us},   {"q", q},             {"t0_us", t0_us},
                {"snr_db", snr_db}, {"samples", samples}, {"lag_max", lag_max},
                {"ts_us", ts_us},   {"peak_lags", peaks}};
    write_run_record(g, "caf", config);
    return 0;
}

// ---------------------------------------------------------------------------
// train-supervised
// ---------------------------------------------------------------------------

int cmd_train_supervised(const GlobalOptions& g, const std::string& dataset_dir,
                         const std::string& target, attack::SupervisedTrainOptions opt,
                         std::vector<int> valid_n, std::vector<double> delta_f_grid) {
    const auto train_set = dataset::load_dataset(dataset_dir);
    json config{{"dataset", dataset_dir},
                {"target", target},
                {"steps", opt.steps},
                {"batch", opt.batch},
                {"lr", opt.lr},
                {"optimizer", opt.opt == nn::Optimizer::Adam ? "adam" : "sgd"}};
    opt.seed = g.seed;

    if (target == "params" || target == "both" || target == "occupancy") {
        if (valid_n.empty()) valid_n = {train_set.manifest.n};
        if (delta_f_grid.empty())
            delta_f_grid =
                train_set.manifest.config.value("delta_f_grid", std::vector<double>{15000.0});
        const auto models =
            attack::train_supervised(train_set, attack::ParamGrids{valid_n, delta_f_grid}, opt);
        if (target != "occupancy")
            nn::save_mlp((fs::path(g.out) / "upper.ckpt").string(), models.upper);
        if (target != "params")
            nn::save_mlp((fs::path(g.out) / "lower.ckpt").string(), models.lower);
        config["valid_n"] = valid_n;
        config["delta_f_grid"] = delta_f_grid;
    } else if (target == "example1-class" || target == "example1-est") {
        const Eigen::MatrixXd x = dataset::features_as_double(train_set);
        Rng init(derive_seed(g.seed, 1));
        const bool classify = target == "example1-class";
        Eigen::MatrixXd y;
        if (classify) {
            y = Eigen::MatrixXd::Zero(3, train_set.rows());
            for (long r = 0; r < train_set.rows(); ++r) y(train_set.labels_u8[r], r) = 1.0;
        } else {
            // Targets [q, T_u in units of 100 us] to balance magnitudes.
            y.resize(2, train_set.rows());
            for (long r = 0; r < train_set.rows(); ++r) {
                const auto& c = kTableCases[train_set.labels_u8[r]];
                y(0, r) = c.q;
                y(1, r) = c.t_u_s * 1e4;
            }
        }
        auto model = nn::make_mlp(static_cast<int>(x.rows()), opt.upper_hidden,
                                  static_cast<int>(y.rows()),
                                  classify ? nn::Activation::Softmax : nn::Activation::Linear,
                                  init);
        nn::TrainConfig tc{.lr = opt.lr, .batch = opt.batch, .steps = opt.steps, .opt = opt.opt,
                           .seed = derive_seed(g.seed, 2)};
        const auto trace = nn::train(
            model, x, y, classify ? nn::Loss::CrossEntropySoftmax : nn::Loss::SquaredError, tc);
        nn::save_mlp((fs::path(g.out) / "model.ckpt").string(), model);
        std::ostringstream os;
        os << "step,loss\n";
        for (std::size_t i = 0; i < trace.size(); ++i) os << i << ',' << csv_double(trace[i]) << '\n';
        atomic_write_text(fs::path(g.out) / "trace.csv", os.str());
        config["hidden"] = opt.upper_hidden;
    } else {
        throw std::invalid_argument("train-supervised: unknown target " + target);
    }
    write_run_record(g, "train-supervised", config);
    return 0;
}

// ---------------------------------------------------------------------------
// train-vae
// ---------------------------------------------------------------------------

int cmd_train_vae(const GlobalOptions& g, const std::string& dataset_dir, vae::VaeConfig vc,
                  nn::TrainConfig tc, bool select_eta) {
    const auto train_set = dataset::load_dataset(dataset_dir);
    vc.data_dim = train_set.dim();
    tc.seed = derive_seed(g.seed, 2);

    auto run_once = [&](double eta) {
        vae::VaeConfig c = vc;
        c.eta = eta;
        Rng init(derive_seed(g.seed, 1));
        vae::VaeModel m = vae::make_vae(c, init);
        const auto trace = vae::train_variant(m, train_set.x, tc);
        return std::pair{std::move(m), trace};
    };

    double chosen_eta = vc.eta;
    if (select_eta) {
        // Grid scored by downstream occupancy inference on the labeled data.
        if (train_set.manifest.labels != dataset::LabelSchema::Occupancy)
            throw std::invalid_argument("--select-eta needs occupancy labels");
        double best_score = -1.0;
        for (const double eta : {1.0, 0.5, 0.2, 0.1}) {
            auto [m, trace] = run_once(eta);
            auto atk = attack::build_unsupervised_attacker(std::move(m), train_set.x,
                                                           train_set.manifest.t_s, 3.0, 40, 60,
                                                           0.5, derive_seed(g.seed, 3));
            atk.allow_unmapped = true;
            atk.threshold = attack::calibrate_threshold(atk, train_set);
            const double score = 1.0 - attack::unsupervised_occupancy_error(atk, train_set);
            if (score > best_score) {
                best_score = score;
                chosen_eta = eta;
            }
        }
    }

    auto [model, trace] = run_once(chosen_eta);
    vae::save_vae((fs::path(g.out) / "vae.ckpt").string(), model);
    std::ostringstream os;
    os << "step,objective\n";
    for (std::size_t i = 0; i < trace.objective.size(); ++i)
        os << i << ',' << csv_double(trace.objective[i]) << '\n';
    atomic_write_text(fs::path(g.out) / "trace.csv", os.str());

    json config{{"dataset", dataset_dir}, {"vae", vc},          {"eta_selected", chosen_eta},
                {"steps", tc.steps},      {"batch", tc.batch},  {"lr", tc.lr}};
    write_run_record(g, "train-vae", config);
    return 0;
}

// ---------------------------------------------------------------------------
// sense
// ---------------------------------------------------------------------------

int cmd_sense(const GlobalOptions& g, const std::string& dataset_dir, attack::SenseConfig cfg) {
    const auto mixed = dataset::load_dataset(dataset_dir);
    cfg.seed = g.seed;
    const auto report = attack::sense_spectrum(mixed, cfg);

    std::ostringstream os;
    os << "row,label\n";
    for (std::size_t r = 0; r < report.labels.size(); ++r)
        os << r << ',' << report.labels[r] << '\n';
    atomic_write_text(fs::path(g.out) / "labels.csv", os.str());

    json rj{{"accuracy", report.accuracy},
            {"noise_energy_mean", report.cluster_energy_mean[0]},
            {"signal_energy_mean", report.cluster_energy_mean[1]},
            {"noise_mode_energy", report.hist_mode_energy[0]},
            {"signal_mode_energy", report.hist_mode_energy[1]},
            {"modes_distinct", report.modes_distinct}};
    atomic_write_text(fs::path(g.out) / "report.json", rj.dump(2) + "\n");
    write_run_record(g, "sense",
                     json{{"dataset", dataset_dir},
                          {"n_z", cfg.vae.n_z},
                          {"steps", cfg.train.steps}});
    return 0;
}

// ---------------------------------------------------------------------------
// metrics / traverse
// ---------------------------------------------------------------------------

int cmd_metrics(const GlobalOptions& g, const std::string& ckpt, const std::string& dataset_dir,
                int samples_per_trial, int trials, double c, int k, int l) {
    const auto model = vae::load_vae(ckpt);
    const auto ds = dataset::load_dataset(dataset_dir);
    const bool complex_symbols = ds.manifest.modulation == "qam16";
    const double prob = ds.manifest.config.value("random_prob", 0.5);
    const auto spec =
        metrics::make_ncofdm_factor_spec(ds.manifest.n, ds.manifest.n1, complex_symbols, prob);

    const double higgins = metrics::higgins_metric(metrics::encoder_fn(model), spec,
                                                   samples_per_trial, trials,
                                                   derive_seed(g.seed, 1));
    const double kim = metrics::kim_metric(metrics::encoder_fn(model), spec, samples_per_trial,
                                           trials, derive_seed(g.seed, 2));
    const auto t05 = metrics::traversal_metric(
        metrics::encoder_fn(model), metrics::decoder_fn(model), ds.x, c, k, l, 0.5,
        metrics::TraversalMode::Corrected, derive_seed(g.seed, 3));
    const auto t10 = metrics::traversal_metric(
        metrics::encoder_fn(model), metrics::decoder_fn(model), ds.x, c, k, l, 1.0,
        metrics::TraversalMode::Corrected, derive_seed(g.seed, 3));
    Rng rng(derive_seed(g.seed, 4));
    double recon = 0.0;
    const int recon_samples = 200;
    for (int i = 0; i < recon_samples; ++i) {
        const long r = rng.uniform_int(0, ds.rows() - 1);
        recon += vae::reconstruction_error(model, ds.x.col(r).cast<double>());
    }
    recon /= recon_samples;

    std::ostringstream os;
    os << "method,params,higgins,kim,alg1_eps0.5,alg1_eps1.0,recon_error\n";
    os << vae::variant_name(model.cfg.variant) << ',' << "beta=" << model.cfg.beta
       << ";lambda_d=" << model.cfg.lambda_d << ";lambda_od=" << model.cfg.lambda_od
       << ";gamma=" << model.cfg.gamma << ',' << csv_double(higgins) << ',' << csv_double(kim)
       << ',' << csv_double(t05.s0) << ',' << csv_double(t10.s0) << ',' << csv_double(recon)
       << '\n';
    atomic_write_text(fs::path(g.out) / "metrics.csv", os.str());
    write_run_record(g, "metrics",
                     json{{"checkpoint", ckpt},
                          {"dataset", dataset_dir},
                          {"trials", trials},
                          {"samples_per_trial", samples_per_trial},
                          {"c", c},
                          {"k", k},
                          {"l", l}});
    return 0;
}

int cmd_traverse(const GlobalOptions& g, const std::string& ckpt, const std::string& dataset_dir,
                 double c, int k, int l, double eps, const std::string& mode) {
    const auto model = vae::load_vae(ckpt);
    const auto ds = dataset::load_dataset(dataset_dir);
    const auto m =
        mode == "faithful" ? metrics::TraversalMode::Faithful : metrics::TraversalMode::Corrected;
    const auto report =
        metrics::traversal_metric(metrics::encoder_fn(model), metrics::decoder_fn(model), ds.x, c,
                                  k, l, eps, m, derive_seed(g.seed, 1));
    std::ostringstream os;
    os << "latent,verdict,bins\n";
    for (int j = 0; j < static_cast<int>(report.verdicts.size()); ++j) {
        const char* v = report.verdicts[j] == metrics::LatentVerdict::Disentangled ? "disentangled"
                        : report.verdicts[j] == metrics::LatentVerdict::Entangled  ? "entangled"
                                                                                   : "uninformative";
        os << j << ',' << v << ',';
        if (report.latent_to_bins.count(j)) {
            const auto& bins = report.latent_to_bins.at(j);
            for (std::size_t i = 0; i < bins.size(); ++i) os << (i ? ";" : "") << bins[i];
        }
        os << '\n';
    }
    atomic_write_text(fs::path(g.out) / "traversal.csv", os.str());
    write_run_record(g, "traverse",
                     json{{"checkpoint", ckpt},
                          {"dataset", dataset_dir},
                          {"eps", eps},
                          {"mode", mode},
                          {"s0", report.s0},
                          {"informative", report.informative},
                          {"reliable", report.reliable}});
    return 0;
}

// ---------------------------------------------------------------------------
// spoof-eval / rx-eval
// ---------------------------------------------------------------------------

int cmd_spoof_eval(const GlobalOptions& g, const std::string& scenario_path,
                   const std::string& adversary, const std::string& upper_ckpt,
                   const std::string& lower_ckpt, const std::string& vae_ckpt,
                   const std::string& map_dataset, const char* record_name) {
    std::ifstream is(scenario_path);
    if (!is) throw std::invalid_argument("cannot open scenario: " + scenario_path);
    attack::SpoofScenario sc = json::parse(is).get<attack::SpoofScenario>();
    sc.threads = g.threads;
    if (sc.seed == 0) sc.seed = g.seed;

    attack::SupervisedModels models;
    attack::UnsupervisedAttacker atk;
    std::optional<attack::EstimatorFn> estimator;
    if (adversary == "supervised") {
        models.upper = nn::load_mlp(upper_ckpt);
        models.lower = nn::load_mlp(lower_ckpt);
        models.grids.valid_n = {sc.tx.n};
        models.grids.delta_f_grid_hz = sc.tx.delta_f_grid;
        estimator = attack::make_supervised_estimator(models);
    } else if (adversary == "unsupervised") {
        const auto label_set = dataset::load_dataset(map_dataset);
        atk = attack::build_unsupervised_attacker(vae::load_vae(vae_ckpt), label_set.x,
                                                  label_set.manifest.t_s, 3.0, 40, 60, 0.5,
                                                  derive_seed(g.seed, 77));
        atk.allow_unmapped = true;
        atk.threshold = attack::calibrate_threshold(atk, label_set);
        estimator = attack::make_unsupervised_estimator(atk);
    } else if (adversary != "oracle") {
        throw std::invalid_argument("unknown adversary: " + adversary);
    }

    const auto report = attack::spoof_ber_eval(sc, estimator ? &*estimator : nullptr);
    write_ber_csv(fs::path(g.out) / "ber.csv", report.ber);
    write_ber_csv(fs::path(g.out) / "baseline.csv", report.baseline);
    json config{{"scenario", sc},
                {"adversary", adversary},
                {"occupancy_mean_error", report.occupancy_mean_error},
                {"param_failure_rate", report.param_failure_rate}};
    write_run_record(g, record_name, config);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NC-OFDM physical-layer spoofing laboratory"};
    app.require_subcommand(1);

    GlobalOptions g;
    const char* env_out = std::getenv("NCOFDM_OUT");
    g.out = env_out ? env_out : "ncofdm-out";
    app.add_option("--seed", g.seed, "global random seed");
    app.add_option("--threads", g.threads, "worker threads");
    app.add_option("--out", g.out, "output directory (default $NCOFDM_OUT or ./ncofdm-out)");
    app.add_option("--profile", g.profile, "desk or paper scale defaults")
        ->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--config", g.config_path, "JSON config file; flags override its values");

    // gen --------------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate a dataset");
    dataset::GenConfig gen_cfg;
    double split_fraction = 0.0;
    std::string gen_pattern = "random", gen_mod = "bpsk", gen_chan = "awgn",
                gen_labels = "occupancy";
    std::vector<double> gen_df_khz{15.0};
    gen->add_option("--n", gen_cfg.n, "total subcarriers");
    gen->add_option("--n1", gen_cfg.n1, "complex samples per frame");
    gen->add_option("--ts", gen_cfg.t_s, "sampling interval in seconds (0 = one symbol period)");
    gen->add_option("--delta-f-khz", gen_df_khz, "subcarrier width grid in kHz");
    gen->add_option("--pattern", gen_pattern, "ofdm|interleaved|pattern1|pattern2|random");
    gen->add_option("--interleave-q", gen_cfg.pattern.interleave_q, "interleave factor");
    gen->add_option("--prob", gen_cfg.pattern.random_prob, "random pattern activation probability");
    gen->add_option("--modulation", gen_mod, "bpsk|qam16");
    gen->add_option("--snr-db", gen_cfg.snr_db, "ensemble SNR in dB");
    gen->add_flag("--noiseless", gen_cfg.noiseless, "skip the noise stage");
    gen->add_option("--random-power", gen_cfg.random_power, "per-subcarrier power in [1,2]");
    gen->add_option("--channel", gen_chan, "awgn|multipath|rayleigh");
    gen->add_option("--noise-fraction", gen_cfg.noise_fraction, "fraction of pure-noise rows");
    gen->add_option("--rows", gen_cfg.rows, "row count (desk default 50000)");
    gen->add_option("--labels", gen_labels, "none|occupancy|class-index");
    gen->add_option("--split", split_fraction, "write train/test split with this train fraction");

    // caf --------------------------------------------------------------------
    auto* caf = app.add_subcommand("caf", "cyclic autocorrelation of an interleaved record");
    std::string caf_case;
    double caf_tu_us = 0.0, caf_t0_us = 384.0, caf_snr = 5.0, caf_ts_us = 1.0;
    int caf_q = 0, caf_lag = 400;
    long caf_m = 100000;
    caf->add_option("--case", caf_case, "table1-1|table1-2|table1-3");
    caf->add_option("--tu-us", caf_tu_us, "useful symbol duration, microseconds");
    caf->add_option("--q", caf_q, "interleave factor");
    caf->add_option("--t0-us", caf_t0_us, "total symbol duration, microseconds");
    caf->add_option("--snr-db", caf_snr, "record SNR (>=1e9 for noiseless)");
    caf->add_option("--samples", caf_m, "record length M");
    caf->add_option("--lag", caf_lag, "maximum lag in samples");
    caf->add_option("--ts-us", caf_ts_us, "sampling interval, microseconds");

    // train-supervised ---------------------------------------------------------
    auto* ts = app.add_subcommand("train-supervised", "train parameter-estimation networks");
    std::string ts_dataset, ts_target = "both", ts_opt_name = "adam";
    attack::SupervisedTrainOptions ts_opt;
    std::vector<int> ts_valid_n;
    std::vector<double> ts_df_grid;
    ts->add_option("--dataset", ts_dataset, "dataset directory")->required();
    ts->add_option("--target", ts_target, "params|occupancy|both|example1-class|example1-est");
    ts->add_option("--steps", ts_opt.steps, "training steps");
    ts->add_option("--batch", ts_opt.batch, "mini-batch size");
    ts->add_option("--lr", ts_opt.lr, "learning rate");
    ts->add_option("--opt", ts_opt_name, "adam|sgd");
    ts->add_option("--hidden", ts_opt.upper_hidden, "hidden widths (example1 targets)");
    ts->add_option("--valid-n", ts_valid_n, "valid subcarrier counts for snapping");
    ts->add_option("--delta-f-grid", ts_df_grid, "valid subcarrier widths in Hz");

    // train-vae ------------------------------------------------------------------
    auto* tv = app.add_subcommand("train-vae", "train a variational autoencoder");
    std::string tv_dataset, tv_variant = "plain";
    vae::VaeConfig tv_cfg;
    nn::TrainConfig tv_tc{.lr = 5e-4, .batch = 100, .steps = 20000, .opt = nn::Optimizer::Adam};
    bool tv_select_eta = false;
    tv->add_option("--dataset", tv_dataset, "dataset directory")->required();
    tv->add_option("--variant", tv_variant, "plain|beta|dip|factor");
    tv->add_option("--beta", tv_cfg.beta, "beta weight");
    tv->add_option("--lambda-d", tv_cfg.lambda_d, "diagonal covariance penalty");
    tv->add_option("--lambda-od", tv_cfg.lambda_od, "off-diagonal covariance penalty");
    tv->add_option("--gamma", tv_cfg.gamma, "total correlation weight");
    tv->add_option("--eta", tv_cfg.eta, "reconstruction weight <= 1");
    tv->add_option("--nz", tv_cfg.n_z, "latent dimension");
    tv->add_option("--steps", tv_tc.steps, "training steps");
    tv->add_option("--batch", tv_tc.batch, "mini-batch size");
    tv->add_option("--lr", tv_tc.lr, "learning rate");
    tv->add_flag("--select-eta", tv_select_eta, "grid-search eta by occupancy accuracy");

    // sense ----------------------------------------------------------------------
    auto* sense = app.add_subcommand("sense", "unsupervised noise/signal separation");
    std::string sense_dataset;
    attack::SenseConfig sense_cfg;
    sense->add_option("--dataset", sense_dataset, "mixed dataset directory")->required();
    sense->add_option("--nz", sense_cfg.vae.n_z, "latent dimension");
    sense->add_option("--steps", sense_cfg.train.steps, "vae training steps");
    sense->add_option("--lr", sense_cfg.train.lr, "learning rate");

    // metrics ----------------------------------------------------------------------
    auto* met = app.add_subcommand("metrics", "disentanglement metric table row");
    std::string met_ckpt, met_dataset;
    int met_samples = 32, met_trials = 400, met_k = 40, met_l = 500;
    double met_c = 3.0;
    met->add_option("--checkpoint", met_ckpt, "vae checkpoint")->required();
    met->add_option("--dataset", met_dataset, "dataset directory")->required();
    met->add_option("--samples-per-trial", met_samples, "fixed-factor samples per trial");
    met->add_option("--trials", met_trials, "classifier training trials");
    met->add_option("--c", met_c, "traversal limit");
    met->add_option("--k", met_k, "traversal steps");
    met->add_option("--l", met_l, "traversal sample count");

    // traverse ----------------------------------------------------------------------
    auto* trav = app.add_subcommand("traverse", "latent traversal report");
    std::string trav_ckpt, trav_dataset, trav_mode = "corrected";
    double trav_c = 3.0, trav_eps = 0.5;
    int trav_k = 40, trav_l = 500;
    trav->add_option("--checkpoint", trav_ckpt, "vae checkpoint")->required();
    trav->add_option("--dataset", trav_dataset, "dataset directory")->required();
    trav->add_option("--c", trav_c, "traversal limit");
    trav->add_option("--k", trav_k, "traversal steps");
    trav->add_option("--l", trav_l, "traversal sample count");
    trav->add_option("--eps", trav_eps, "spectrum difference threshold");
    trav->add_option("--mode", trav_mode, "corrected|faithful");

    // spoof-eval / rx-eval ---------------------------------------------------------
    auto* spoof = app.add_subcommand("spoof-eval", "adversary BER sweep");
    auto* rxev = app.add_subcommand("rx-eval", "legitimate receiver BER sweep");
    std::string sp_scenario, sp_adversary = "oracle", sp_upper, sp_lower, sp_vae, sp_mapds;
    for (auto* c : {spoof, rxev}) {
        c->add_option("--scenario", sp_scenario, "scenario JSON")->required();
        c->add_option(c == spoof ? "--adversary" : "--rx", sp_adversary,
                      "oracle|supervised|unsupervised");
        c->add_option("--upper", sp_upper, "upper network checkpoint");
        c->add_option("--lower", sp_lower, "lower network checkpoint");
        c->add_option("--vae", sp_vae, "vae checkpoint");
        c->add_option("--map-dataset", sp_mapds, "labeled dataset for map and threshold");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const json file_cfg = load_config_file(g.config_path);
        if (gen->parsed()) {
            if (g.profile == "paper" && gen->count("--rows") == 0) gen_cfg.rows = 2000000;
            if (g.profile == "desk" && gen->count("--rows") == 0) gen_cfg.rows = 50000;
            gen_cfg.pattern.family = waveform::pattern_family_from_name(gen_pattern);
            gen_cfg.modulation = waveform::modulation_from_name(gen_mod);
            gen_cfg.chan.kind = channel::channel_kind_from_name(gen_chan);
            gen_cfg.labels = dataset::label_schema_from_name(gen_labels);
            gen_cfg.delta_f_grid.clear();
            for (double khz : gen_df_khz) gen_cfg.delta_f_grid.push_back(khz * 1000.0);
            return cmd_gen(g, file_cfg, gen, gen_cfg, split_fraction);
        }
        if (caf->parsed()) {
            int case_index = 0;
            if (caf_case.rfind("table1-", 0) == 0) case_index = caf_case.back() - '0';
            return cmd_caf(g, case_index, caf_tu_us, caf_q, caf_t0_us, caf_snr, caf_m, caf_lag,
                           caf_ts_us);
        }
        if (ts->parsed()) {
            ts_opt.opt = ts_opt_name == "sgd" ? nn::Optimizer::Sgd : nn::Optimizer::Adam;
            return cmd_train_supervised(g, ts_dataset, ts_target, ts_opt, ts_valid_n, ts_df_grid);
        }
        if (tv->parsed()) {
            tv_cfg.variant = vae::variant_from_name(tv_variant);
            return cmd_train_vae(g, tv_dataset, tv_cfg, tv_tc, tv_select_eta);
        }
        if (sense->parsed()) return cmd_sense(g, sense_dataset, sense_cfg);
        if (met->parsed())
            return cmd_metrics(g, met_ckpt, met_dataset, met_samples, met_trials, met_c, met_k,
                               met_l);
        if (trav->parsed())
            return cmd_traverse(g, trav_ckpt, trav_dataset, trav_c, trav_k, trav_l, trav_eps,
                                trav_mode);
        if (spoof->parsed())
            return cmd_spoof_eval(g, sp_scenario, sp_adversary, sp_upper, sp_lower, sp_vae,
                                  sp_mapds, "spoof-eval");
        if (rxev->parsed())
            return cmd_spoof_eval(g, sp_scenario, sp_adversary, sp_upper, sp_lower, sp_vae,
                                  sp_mapds, "rx-eval");
    } catch (const dataset::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
