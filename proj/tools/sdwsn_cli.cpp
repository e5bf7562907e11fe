// sdwsn: dataset generation, predictor training, SDWSN simulation, parameter
// sweeps, and figure reporting as one reproducible command suite.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "sdwsn/config.hpp"
#include "sdwsn/manifest.hpp"
#include "sdwsn/metrics.hpp"
#include "sdwsn/simengine.hpp"

namespace fs = std::filesystem;
using namespace sdwsn;

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void set_double(Config& c, const std::string& key, double v) {
    c.set(key, fmt_double(v));
}

std::uint64_t resolve_seed(const Config& cfg, std::uint64_t flag_seed,
                           bool flag_given) {
    if (flag_given) return flag_seed;
    return cfg.get_uint64("run.seed", 1);
}

ChannelParams resolve_channel(const Config& in, Config& out) {
    const double alpha = in.get_double("channel.alpha", 3.0);
    const double sigma = in.get_double("channel.sigma_db", 4.0);
    const double beta = in.get_double("channel.beta_th_db", 66.0);
    const double pt = in.get_double("channel.p_t_dbm", 0.0);
    const double r0 = in.get_double("channel.r0_m", 0.0);
    const ChannelParams ch = r0 > 0.0
                                 ? ChannelParams::with_radius(alpha, sigma, r0, pt)
                                 : ChannelParams::from_threshold(alpha, sigma,
                                                                 beta, pt);
    set_double(out, "channel.alpha", alpha);
    set_double(out, "channel.sigma_db", sigma);
    set_double(out, "channel.beta_th_db", beta);
    set_double(out, "channel.p_t_dbm", pt);
    set_double(out, "channel.r0_m", r0);
    return ch;
}

ProtocolConfig resolve_protocol(const Config& in, Config& out, bool prediction,
                                const std::shared_ptr<const Model>& model) {
    ProtocolConfig p;
    p.m_up = in.get_int("protocol.m_up", 2);
    p.k_down = in.get_int("protocol.k_down", 2);
    p.hello_period_s = in.get_double("protocol.hello_period_s", 1.0);
    p.gate_flow_table = in.get_bool("protocol.gate_flow_table", true);
    p.history_limit = in.get_int("protocol.history_limit", 10);
    p.prediction_enabled = prediction;
    if (model) p.history_limit = std::max(p.history_limit, model->k);
    out.set("protocol.m_up", std::to_string(p.m_up));
    out.set("protocol.k_down", std::to_string(p.k_down));
    set_double(out, "protocol.hello_period_s", p.hello_period_s);
    out.set("protocol.gate_flow_table", p.gate_flow_table ? "true" : "false");
    out.set("protocol.history_limit", std::to_string(p.history_limit));
    out.set("protocol.prediction", prediction ? "true" : "false");
    return p;
}

ScenarioConfig resolve_scenario(const Config& in, Config& out,
                                std::uint64_t seed, bool prediction,
                                const std::shared_ptr<const Model>& model) {
    ScenarioConfig s;
    s.channel = resolve_channel(in, out);
    s.protocol = resolve_protocol(in, out, prediction, model);
    s.model = model;
    s.seed = seed;

    const std::string placement = in.get_string("scenario.placement", "uniform");
    s.placement = placement_from_name(placement);
    s.area_w_m = in.get_double("scenario.area_w_m", 500.0);
    s.area_h_m = in.get_double("scenario.area_h_m", 500.0);
    s.density = in.get_double("scenario.density", 12e-5);
    s.node_count = in.get_int("scenario.node_count", 0);
    s.duration_s = in.get_double("scenario.duration_s", 2000.0);
    s.t1_start_s = in.get_double("scenario.t1_start_s", 100.0);
    s.t1_period_s = in.get_double("scenario.t1_period_s", 200.0);
    s.t2_delay_s = in.get_double("scenario.t2_delay_s", 10.0);
    s.broadcast_cutoff_factor =
        in.get_double("scenario.broadcast_cutoff_factor", 2.0);

    const double r0 = s.channel.r0_m;
    if (s.placement == Placement::kLine) {
        const double spacing_r0 = in.get_double("scenario.line_spacing_r0", 0.35);
        const double span_r0 = in.get_double("scenario.line_span_r0", 8.4);
        s.line_spacing_m = spacing_r0 * r0;
        s.line_count = in.get_int(
            "scenario.line_count",
            static_cast<int>(std::floor(span_r0 / spacing_r0)) + 1);
        set_double(out, "scenario.line_spacing_r0", spacing_r0);
        out.set("scenario.line_count", std::to_string(s.line_count));
    } else if (s.placement == Placement::kPair) {
        const double d_r0 = in.get_double("scenario.pair_distance_r0", 1.0);
        s.pair_distance_m = d_r0 * r0;
        set_double(out, "scenario.pair_distance_r0", d_r0);
    }

    out.set("scenario.placement", placement_name(s.placement));
    set_double(out, "scenario.area_w_m", s.area_w_m);
    set_double(out, "scenario.area_h_m", s.area_h_m);
    set_double(out, "scenario.density", s.density);
    out.set("scenario.node_count", std::to_string(s.node_count));
    set_double(out, "scenario.duration_s", s.duration_s);
    set_double(out, "scenario.t1_start_s", s.t1_start_s);
    set_double(out, "scenario.t1_period_s", s.t1_period_s);
    set_double(out, "scenario.t2_delay_s", s.t2_delay_s);
    set_double(out, "scenario.broadcast_cutoff_factor",
               s.broadcast_cutoff_factor);
    return s;
}

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::string model_path;
    std::uint64_t seed = 1;
    bool seed_given = false;
    bool no_prediction = false;
    int jobs = 1;
};

Config load_config_or_empty(const std::string& path) {
    if (path.empty()) return Config{};
    return Config::parse_file(path);
}

std::shared_ptr<const Model> maybe_load_model(const std::string& path) {
    if (path.empty()) return nullptr;
    return std::make_shared<const Model>(load_model(path));
}

// -------------------------------------------------------------- gen-data --

int cmd_gen_data(const CommonArgs& args) {
    const Config cfg = load_config_or_empty(args.config_path);
    const std::uint64_t seed = resolve_seed(cfg, args.seed, args.seed_given);

    Config resolved;
    const ChannelParams channel = resolve_channel(cfg, resolved);
    const int n_links = cfg.get_int("dataset.n_links", 1000);
    const int periods = cfg.get_int("dataset.periods_per_link", 110);
    const int k = cfg.get_int("dataset.k", 10);
    if (k < 1) throw std::invalid_argument("dataset.k must be >= 1");
    if (n_links < 1) throw std::invalid_argument("dataset.n_links must be >= 1");
    if (periods <= k)
        throw std::invalid_argument(
            "dataset.periods_per_link must exceed dataset.k");
    resolved.set("dataset.n_links", std::to_string(n_links));
    resolved.set("dataset.periods_per_link", std::to_string(periods));
    resolved.set("dataset.k", std::to_string(k));

    Rng rng(seed);
    const Dataset data = generate_dataset(channel, n_links, periods, k, rng);
    fs::create_directories(fs::path(args.out_path).parent_path().empty()
                               ? "."
                               : fs::path(args.out_path).parent_path().string());
    write_dataset_csv(args.out_path, data, k);

    RunManifest man;
    man.command = "gen-data";
    man.seed = seed;
    man.config = resolved;
    if (!args.config_path.empty()) man.add_input(args.config_path);
    man.add_output(args.out_path);
    man.write(args.out_path + ".manifest");

    std::cout << "wrote " << data.size() << " samples to " << args.out_path
              << "\n";
    return 0;
}

// ----------------------------------------------------------------- train --

int cmd_train(const CommonArgs& args, std::string data_path, std::string kind) {
    const Config cfg = load_config_or_empty(args.config_path);
    const std::uint64_t seed = resolve_seed(cfg, args.seed, args.seed_given);
    if (data_path.empty()) data_path = cfg.get_string("train.data", "");
    if (kind.empty()) kind = cfg.get_string("train.kind", "logistic");
    if (data_path.empty())
        throw std::invalid_argument("train: no dataset (--data or train.data)");

    TrainOptions opt;
    opt.kind = model_kind_from_name(kind);
    opt.logistic_max_iters = cfg.get_int("train.logistic_max_iters", 40);
    opt.ridge = cfg.get_double("train.ridge", 1e-6);
    opt.max_depth = cfg.get_int("train.max_depth", 10);
    opt.min_leaf = cfg.get_int("train.min_leaf", 10);
    opt.max_thresholds = cfg.get_int("train.max_thresholds", 64);
    opt.n_trees = cfg.get_int("train.n_trees", 15);
    const double test_fraction = cfg.get_double("train.test_fraction", 0.2);

    const auto [data, k] = read_dataset_csv(data_path);
    Rng split_rng(mix64(seed, 0xA));
    const auto [train_set, holdout] = split_stratified(data, test_fraction,
                                                       split_rng);
    Rng train_rng(mix64(seed, 0xB));
    const Model model = train(train_set, opt, train_rng);
    const EvalReport r = evaluate(model, holdout);

    save_model(args.out_path, model);

    Config resolved;
    resolved.set("train.data", data_path);
    resolved.set("train.kind", kind);
    resolved.set("train.logistic_max_iters",
                 std::to_string(opt.logistic_max_iters));
    set_double(resolved, "train.ridge", opt.ridge);
    resolved.set("train.max_depth", std::to_string(opt.max_depth));
    resolved.set("train.min_leaf", std::to_string(opt.min_leaf));
    resolved.set("train.max_thresholds", std::to_string(opt.max_thresholds));
    resolved.set("train.n_trees", std::to_string(opt.n_trees));
    set_double(resolved, "train.test_fraction", test_fraction);

    RunManifest man;
    man.command = "train";
    man.seed = seed;
    man.config = resolved;
    man.add_input(data_path);
    if (!args.config_path.empty()) man.add_input(args.config_path);
    man.add_output(args.out_path);
    man.write(args.out_path + ".manifest");

    std::printf(
        "kind=%s k=%d train_n=%zu holdout_n=%zu acc=%.4f f1=%.4f "
        "precision=%.4f recall=%.4f\n",
        kind.c_str(), k, train_set.size(), holdout.size(), r.acc, r.f1,
        r.precision, r.recall);
    return 0;
}

// -------------------------------------------------------------- simulate --

int cmd_simulate(const CommonArgs& args) {
    const Config cfg = load_config_or_empty(args.config_path);
    const std::uint64_t seed = resolve_seed(cfg, args.seed, args.seed_given);

    std::string model_path = args.model_path;
    if (model_path.empty()) model_path = cfg.get_string("model.path", "");
    bool prediction = cfg.get_bool("protocol.prediction", !model_path.empty());
    if (args.no_prediction) prediction = false;
    if (prediction && model_path.empty())
        throw std::invalid_argument(
            "prediction enabled but no model provided (--model)");
    const auto model = prediction ? maybe_load_model(model_path) : nullptr;

    Config resolved;
    const ScenarioConfig scenario =
        resolve_scenario(cfg, resolved, seed, prediction, model);
    if (!model_path.empty()) resolved.set("model.path", model_path);

    const RunResult result = run(scenario);
    save_run(args.out_path, result);

    RunManifest man;
    man.command = "simulate";
    man.seed = seed;
    man.config = resolved;
    if (!args.config_path.empty()) man.add_input(args.config_path);
    if (model) man.add_input(model_path);
    for (const char* f : {"positions.csv", "trace.csv", "ledger.csv",
                          "flows.csv", "members.csv", "runmeta.csv"})
        man.add_output((fs::path(args.out_path) / f).string());
    man.write((fs::path(args.out_path) / "manifest.txt").string());

    std::cout << "simulated " << result.node_count() << " nodes for "
              << scenario.duration_s << " s: " << result.events_processed
              << " events, " << result.trace.size() << " trace records -> "
              << args.out_path << "\n";
    return 0;
}

// ---------------------------------------------------------------- report --

struct LoadedRun {
    std::string dir;
    RunResult result;
};

std::vector<LoadedRun> load_runs(const std::string& in_dir) {
    std::vector<std::string> dirs;
    if (fs::exists(fs::path(in_dir) / "runmeta.csv")) dirs.push_back(in_dir);
    if (fs::is_directory(in_dir)) {
        for (const auto& e : fs::directory_iterator(in_dir))
            if (e.is_directory() &&
                fs::exists(e.path() / "runmeta.csv"))
                dirs.push_back(e.path().string());
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<LoadedRun> runs;
    for (const auto& d : dirs) runs.push_back({d, load_run(d)});
    return runs;
}

// stability samples of one run: the pair link for pair runs, every node's
// members set otherwise
std::vector<DurationStat> neighbor_samples(const RunResult& r) {
    std::vector<DurationStat> out;
    for (int v = 0; v < r.node_count(); ++v)
        out.push_back(neighbor_stable_duration(r, static_cast<NodeId>(v)));
    return out;
}

void write_summary(const std::string& path, double radius_off_r0,
                   double radius_on_r0, bool have_line) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "# network stability summary\n";
    f << "# note: the line deployment extends beyond the 500 m square so the\n";
    f << "# 30% end-to-end threshold is measurable for the gated network.\n";
    if (have_line) {
        f << "network_radius_without_prediction_r0 = " << fmt_double(radius_off_r0)
          << "\n";
        f << "network_radius_with_prediction_r0 = " << fmt_double(radius_on_r0)
          << "\n";
    } else {
        f << "# no line-deployment traces found; radii unavailable\n";
    }
}

int generate_figures(const std::vector<LoadedRun>& runs,
                     const std::string& out_dir,
                     const std::shared_ptr<const Model>& model,
                     std::uint64_t seed, RunManifest& man) {
    fs::create_directories(out_dir);
    const auto outfile = [&](const char* name) {
        return (fs::path(out_dir) / name).string();
    };

    const ChannelParams channel =
        runs.empty() ? ChannelParams::from_threshold(3.0, 4.0, 66.0, 0.0)
                     : runs.front().result.config.channel;
    const double r0 = channel.r0_m;

    // fig3: closed-form delivery curve
    {
        std::vector<std::vector<double>> rows;
        for (double f = 0.05; f <= 2.5 + 1e-9; f += 0.05)
            rows.push_back({f, delivery_probability(f * r0, channel)});
        write_table_csv(outfile("fig3_delivery.csv"), {"x_r0", "p_delivery"},
                        rows);
        man.add_output(outfile("fig3_delivery.csv"));
    }

    // fig7/fig8 need the predictor
    if (model) {
        std::vector<double> grid;
        for (double f = 0.1; f <= 2.0 + 1e-9; f += 0.05) grid.push_back(f * r0);
        Rng rng7(mix64(seed, 0x717));
        const auto acc = accuracy_vs_distance(*model, channel, grid, 10000, rng7);
        std::vector<std::vector<double>> rows7;
        for (const auto& p : acc) rows7.push_back({p.x / r0, p.value});
        write_table_csv(outfile("fig7_accuracy.csv"), {"x_r0", "accuracy"},
                        rows7);
        man.add_output(outfile("fig7_accuracy.csv"));

        Rng rng8(mix64(seed, 0x818));
        const auto eff = effective_delivery_curve(*model, channel, grid, 10000,
                                                  rng8);
        std::vector<std::vector<double>> rows8;
        for (const auto& p : eff)
            rows8.push_back(
                {p.x / r0, delivery_probability(p.x, channel), p.value});
        write_table_csv(outfile("fig8_effective.csv"),
                        {"x_r0", "p_raw", "p_effective"}, rows8);
        man.add_output(outfile("fig8_effective.csv"));
    }

    // pair runs -> link stability vs distance (fig11 off / fig12 on)
    struct PairKey {
        double x;  // r0 units
        int m, k;
        bool operator<(const PairKey& o) const {
            return std::tie(m, k, x) < std::tie(o.m, o.k, o.x);
        }
    };
    std::map<PairKey, std::vector<DurationStat>> pair_off, pair_on;
    // uniform runs -> neighbor stability / count vs density
    struct DensKey {
        double x;  // nodes per m^2
        int m, k;
        bool operator<(const DensKey& o) const {
            return std::tie(m, k, x) < std::tie(o.m, o.k, o.x);
        }
    };
    std::map<DensKey, std::vector<DurationStat>> dens_off, dens_on;
    std::map<DensKey, std::vector<double>> count_off, count_on;
    // line runs -> pooled hop/e2e samples
    std::vector<std::pair<double, double>> hops_off, hops_on, e2e_off, e2e_on;
    bool have_line = false;

    for (const auto& lr : runs) {
        const RunResult& r = lr.result;
        const bool on = r.config.protocol.prediction_enabled;
        const int m = r.config.protocol.m_up;
        const int k = r.config.protocol.k_down;
        switch (r.config.placement) {
            case Placement::kPair: {
                const PairKey key{r.config.pair_distance_m / r0, m, k};
                auto& bucket = on ? pair_on : pair_off;
                bucket[key].push_back(link_stable_duration(r, 0, 1));
                bucket[key].push_back(link_stable_duration(r, 1, 0));
                break;
            }
            case Placement::kUniform: {
                const DensKey key{r.config.density, m, k};
                const auto samples = neighbor_samples(r);
                auto& bucket = on ? dens_on : dens_off;
                bucket[key].insert(bucket[key].end(), samples.begin(),
                                   samples.end());
                double count = 0.0;
                for (int v = 0; v < r.node_count(); ++v)
                    count += avg_neighbor_count(r, static_cast<NodeId>(v));
                (on ? count_on : count_off)[key].push_back(count /
                                                           r.node_count());
                break;
            }
            case Placement::kLine: {
                have_line = true;
                const int n = r.node_count();
                for (NodeId i = 0; i < static_cast<NodeId>(n); ++i) {
                    for (NodeId j = 0; j < static_cast<NodeId>(n); ++j) {
                        if (i == j) continue;
                        const auto path =
                            route_path(r.controller_tables, i, j);
                        if (!path) continue;
                        const double d = r.deployment.distance(i, j) / r0;
                        (on ? hops_on : hops_off)
                            .emplace_back(d, static_cast<double>(path->size() - 1));
                        (on ? e2e_on : e2e_off)
                            .emplace_back(d, route_delivery(r, *path, on));
                    }
                }
                break;
            }
        }
    }

    const auto stability_rows = [](const auto& bucket) {
        std::vector<std::vector<double>> rows;
        for (const auto& [key, stats] : bucket) {
            const auto p = summarize_durations(key.x, stats);
            rows.push_back({key.x, static_cast<double>(key.m),
                            static_cast<double>(key.k), p.mean_s, p.stderr_s,
                            p.median_s, static_cast<double>(p.n),
                            static_cast<double>(p.censored)});
        }
        return rows;
    };
    const std::vector<std::string> stab_header_x{
        "x_r0", "m", "k", "mean_s", "stderr_s", "median_s", "n", "censored"};
    const std::vector<std::string> stab_header_d{
        "density", "m", "k", "mean_s", "stderr_s", "median_s", "n", "censored"};

    if (!pair_off.empty() || !pair_on.empty()) {
        write_table_csv(outfile("fig11_link_stability_off.csv"), stab_header_x,
                        stability_rows(pair_off));
        write_table_csv(outfile("fig12_link_stability_on.csv"), stab_header_x,
                        stability_rows(pair_on));
        man.add_output(outfile("fig11_link_stability_off.csv"));
        man.add_output(outfile("fig12_link_stability_on.csv"));
    }
    if (!dens_off.empty() || !dens_on.empty()) {
        write_table_csv(outfile("fig13_neighbor_stability_on.csv"),
                        stab_header_d, stability_rows(dens_on));
        write_table_csv(outfile("fig14_neighbor_stability_off.csv"),
                        stab_header_d, stability_rows(dens_off));
        man.add_output(outfile("fig13_neighbor_stability_on.csv"));
        man.add_output(outfile("fig14_neighbor_stability_off.csv"));

        std::vector<std::vector<double>> rows;
        for (const auto& [key, counts] : count_off) {
            double mean = 0.0;
            for (double c : counts) mean += c;
            rows.push_back({key.x, 0.0, mean / counts.size()});
        }
        for (const auto& [key, counts] : count_on) {
            double mean = 0.0;
            for (double c : counts) mean += c;
            rows.push_back({key.x, 1.0, mean / counts.size()});
        }
        write_table_csv(outfile("fig15_neighbor_count.csv"),
                        {"density", "prediction", "avg_neighbors"}, rows);
        man.add_output(outfile("fig15_neighbor_count.csv"));
    }

    double radius_off = std::nan(""), radius_on = std::nan("");
    if (have_line) {
        const double bin = 0.1;  // r0 units
        std::vector<std::vector<double>> hop_rows, e2e_rows;
        for (const auto& p : bin_curve(hops_off, bin))
            hop_rows.push_back({p.x, 0.0, p.value});
        for (const auto& p : bin_curve(hops_on, bin))
            hop_rows.push_back({p.x, 1.0, p.value});
        const auto e2e_off_curve = bin_curve(e2e_off, bin);
        const auto e2e_on_curve = bin_curve(e2e_on, bin);
        for (const auto& p : e2e_off_curve)
            e2e_rows.push_back({p.x, 0.0, p.value});
        for (const auto& p : e2e_on_curve)
            e2e_rows.push_back({p.x, 1.0, p.value});
        write_table_csv(outfile("fig16_hop_count.csv"),
                        {"x_r0", "prediction", "mean_hops"}, hop_rows);
        write_table_csv(outfile("fig17_e2e.csv"),
                        {"x_r0", "prediction", "e2e_delivery"}, e2e_rows);
        man.add_output(outfile("fig16_hop_count.csv"));
        man.add_output(outfile("fig17_e2e.csv"));
        radius_off = network_radius(e2e_off_curve);
        radius_on = network_radius(e2e_on_curve);
    }
    write_summary(outfile("summary.txt"), radius_off, radius_on, have_line);
    man.add_output(outfile("summary.txt"));
    return 0;
}

int cmd_report(const CommonArgs& args, const std::string& in_dir) {
    const auto runs = load_runs(in_dir);
    if (runs.empty())
        throw std::runtime_error("no traces found in " + in_dir);
    const auto model = maybe_load_model(args.model_path);

    RunManifest man;
    man.command = "report";
    man.seed = args.seed;
    for (const auto& lr : runs)
        man.add_input((fs::path(lr.dir) / "runmeta.csv").string());
    if (model) man.add_input(args.model_path);

    generate_figures(runs, args.out_path, model, args.seed, man);
    man.write((fs::path(args.out_path) / "manifest.txt").string());
    std::cout << "report over " << runs.size() << " runs -> " << args.out_path
              << "\n";
    return 0;
}

// ----------------------------------------------------------------- sweep --

struct SweepRun {
    std::size_t index;
    Config overrides;  // applied on top of the base config
    bool prediction;
};

int cmd_sweep(const CommonArgs& args) {
    const Config cfg = load_config_or_empty(args.config_path);
    const std::uint64_t master_seed = resolve_seed(cfg, args.seed,
                                                   args.seed_given);
    const std::string kind = cfg.require_string("sweep.kind");
    const int seeds = cfg.get_int("sweep.seeds", 20);
    std::string modes = cfg.get_string("sweep.modes", "both");
    if (args.no_prediction) modes = "off";
    const bool mk_grid = cfg.get_bool("sweep.mk_grid", false);
    if (kind != "density" && kind != "distance" && kind != "line")
        throw std::invalid_argument(
            "sweep.kind must be density, distance, or line");
    if (modes != "both" && modes != "on" && modes != "off")
        throw std::invalid_argument("sweep.modes must be both, on, or off");

    std::string model_path = args.model_path;
    if (model_path.empty()) model_path = cfg.get_string("model.path", "");
    const bool needs_model = modes != "off";
    if (needs_model && model_path.empty())
        throw std::invalid_argument(
            "sweep includes prediction-on runs but no model provided (--model)");
    const auto model = needs_model ? maybe_load_model(model_path) : nullptr;

    std::vector<double> values;
    if (kind == "density")
        values = cfg.get_double_list(
            "sweep.values", {4e-5, 8e-5, 12e-5, 16e-5, 20e-5, 24e-5, 28e-5});
    else if (kind == "distance")
        values = cfg.get_double_list(
            "sweep.values",
            {0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5});
    else
        values = {0.0};  // line geometry comes from the scenario keys

    std::vector<std::pair<int, int>> mks;
    if (mk_grid) {
        for (int m = 1; m <= 3; ++m)
            for (int kd = 1; kd <= 3; ++kd) mks.emplace_back(m, kd);
    } else {
        mks.emplace_back(cfg.get_int("protocol.m_up", 2),
                         cfg.get_int("protocol.k_down", 2));
    }
    std::vector<bool> mode_list;
    if (modes == "both")
        mode_list = {false, true};
    else
        mode_list = {modes == "on"};

    std::vector<SweepRun> plan;
    for (double value : values) {
        for (const auto& [m, kd] : mks) {
            for (bool on : mode_list) {
                for (int s = 0; s < seeds; ++s) {
                    SweepRun sr;
                    sr.index = plan.size();
                    sr.prediction = on;
                    sr.overrides.set("protocol.m_up", std::to_string(m));
                    sr.overrides.set("protocol.k_down", std::to_string(kd));
                    if (kind == "density") {
                        sr.overrides.set("scenario.placement", "uniform");
                        set_double(sr.overrides, "scenario.density", value);
                    } else if (kind == "distance") {
                        sr.overrides.set("scenario.placement", "pair");
                        set_double(sr.overrides, "scenario.pair_distance_r0",
                                   value);
                    } else {
                        sr.overrides.set("scenario.placement", "line");
                    }
                    plan.push_back(std::move(sr));
                }
            }
        }
    }

    fs::create_directories(args.out_path);
    const int jobs = std::max(1, args.jobs);
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(plan.size());
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= plan.size()) return;
            try {
                const SweepRun& sr = plan[i];
                Config run_cfg = cfg;
                for (const auto& [k2, v2] : sr.overrides.values())
                    run_cfg.set(k2, v2);
                Config resolved;
                const std::uint64_t run_seed =
                    mix64(master_seed, static_cast<std::uint64_t>(i) + 1);
                const ScenarioConfig scenario = resolve_scenario(
                    run_cfg, resolved, run_seed, sr.prediction,
                    sr.prediction ? model : nullptr);
                if (!model_path.empty()) resolved.set("model.path", model_path);
                const RunResult result = run(scenario);
                char name[32];
                std::snprintf(name, sizeof name, "run_%05zu", sr.index);
                const std::string dir = (fs::path(args.out_path) / name).string();
                save_run(dir, result);
                RunManifest man;
                man.command = "simulate";
                man.seed = run_seed;
                man.config = resolved;
                for (const char* f :
                     {"positions.csv", "trace.csv", "ledger.csv", "flows.csv",
                      "members.csv", "runmeta.csv"})
                    man.add_output((fs::path(dir) / f).string());
                man.write((fs::path(dir) / "manifest.txt").string());
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (std::size_t i = 0; i < plan.size(); ++i)
        if (!errors[i].empty())
            throw std::runtime_error("sweep run " + std::to_string(i) +
                                     " failed: " + errors[i]);

    // aggregate the figures over the fresh runs, ordered by index
    const auto runs = load_runs(args.out_path);
    RunManifest man;
    man.command = "sweep";
    man.seed = master_seed;
    Config resolved_sweep = cfg;
    resolved_sweep.set("sweep.kind", kind);
    resolved_sweep.set("sweep.seeds", std::to_string(seeds));
    resolved_sweep.set("sweep.modes", modes);
    resolved_sweep.set("sweep.mk_grid", mk_grid ? "true" : "false");
    if (!model_path.empty()) resolved_sweep.set("model.path", model_path);
    man.config = resolved_sweep;
    if (!args.config_path.empty()) man.add_input(args.config_path);
    if (model) man.add_input(model_path);
    generate_figures(runs, args.out_path, model, master_seed, man);
    man.write((fs::path(args.out_path) / "manifest.txt").string());
    std::cout << "sweep " << kind << ": " << plan.size() << " runs -> "
              << args.out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"link-quality-gated SDWSN simulator"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string data_path, kind, in_dir;

    const auto add_common = [&](CLI::App* sub, bool with_model) {
        sub->add_option("--config", args.config_path, "key = value config file");
        sub->add_option("--seed", args.seed, "master random seed")
            ->each([&](const std::string&) { args.seed_given = true; });
        sub->add_option("--out", args.out_path, "output path")->required();
        if (with_model) {
            sub->add_option("--model", args.model_path, "trained model file");
            sub->add_flag("--no-prediction", args.no_prediction,
                          "disable the predictor gate");
        }
    };

    auto* gen = app.add_subcommand("gen-data",
                                   "synthesize a link-history dataset CSV");
    add_common(gen, false);

    auto* tr = app.add_subcommand("train", "train a packet-reception predictor");
    add_common(tr, false);
    tr->add_option("--data", data_path, "dataset CSV from gen-data");
    tr->add_option("--kind", kind, "logistic | tree | forest");

    auto* sim = app.add_subcommand("simulate", "run one network scenario");
    add_common(sim, true);

    auto* sw = app.add_subcommand("sweep", "run a parameter sweep");
    add_common(sw, true);
    sw->add_option("--jobs", args.jobs, "parallel runs");

    auto* rep = app.add_subcommand("report", "compute figure CSVs from traces");
    add_common(rep, true);
    rep->add_option("--in", in_dir, "directory of simulation runs")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(args);
        if (tr->parsed()) return cmd_train(args, data_path, kind);
        if (sim->parsed()) return cmd_simulate(args);
        if (sw->parsed()) return cmd_sweep(args);
        if (rep->parsed()) return cmd_report(args, in_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
