#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "steerkit/steerkit.hpp"

namespace sk = steerkit;

namespace {

// Flags that mirror config keys. Values go through the same parser as the
// config file, so both paths validate identically.
struct ConfigFlag {
    const char* flag;
    const char* key;
    const char* help;
};

constexpr ConfigFlag config_flags[] = {
    {"--k", "k", "steering strength; lambda_t = k * sqrt(1 - alpha_bar_t)"},
    {"--zeta", "zeta", "neighbourhood radius in pixels for fill positions"},
    {"--fill-density", "fill_density", "fill positions per zeta^2 of uncovered area"},
    {"--steps", "steps", "number of reverse steps"},
    {"--seed", "seed", "RNG seed (default: $STEERKIT_SEED or 0)"},
    {"--refit-per-step", "refit_per_step", "refit the condition scale at every step (true|false)"},
    {"--resample-positions", "resample_positions", "redraw fill positions at every step (true|false)"},
    {"--condition-fit", "condition_fit", "inverse|forward"},
    {"--schedule", "schedule", "subsampled|linear|scaled_linear|explicit"},
    {"--beta-start", "beta_start", "first beta of the training schedule"},
    {"--beta-end", "beta_end", "last beta of the training schedule"},
    {"--train-steps", "train_steps", "training steps for the subsampled schedule"},
    {"--betas", "betas", "comma-separated betas for the explicit schedule"},
    {"--codec", "codec", "identity|pool<N>"},
    {"--denoiser", "denoiser", "oracle|biased|bridge"},
    {"--bias", "bias", "none|blur:<sigma>|affine:<scale>,<shift>|plane"},
    {"--prior", "prior", "none or <sigma>[,<ell>[,<band>]]"},
    {"--prediction", "prediction", "eps|v for the built-in oracles"},
    {"--bridge", "bridge", "host:port or stdio:<command>; selects the bridge denoiser"},
    {"--bridge-timeout-ms", "bridge_timeout_ms", "per-frame I/O timeout"},
    {"--bridge-subsample", "bridge_subsample", "subsample a longer server schedule (true|false)"},
};

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> values = std::vector<std::string>(std::size(config_flags));
    std::vector<CLI::Option*> options;

    void attach(CLI::App& app) {
        app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
        for (std::size_t i = 0; i < std::size(config_flags); ++i)
            options.push_back(app.add_option(config_flags[i].flag, values[i], config_flags[i].help));
    }

    // built-in defaults < STEERKIT_SEED < config file < flags
    sk::RunConfig resolve() const {
        sk::RunConfig cfg;
        cfg.steering.seed = sk::seed_from_env(0);
        if (!config_path.empty()) sk::apply(cfg, sk::read_key_values(config_path));
        sk::KeyValues kv;
        for (std::size_t i = 0; i < options.size(); ++i)
            if (options[i]->count() > 0) kv[config_flags[i].key] = values[i];
        sk::apply(cfg, kv);
        if (!cfg.bridge.empty()) cfg.denoiser = "bridge";
        cfg.steering.validate();
        return cfg;
    }
};

std::vector<std::string> split(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

// Bridge session plus everything derived from INIT_ACK.
struct Remote {
    sk::bridge::Session session;
    sk::bridge::BridgeDenoiser denoiser;
    sk::bridge::BridgeCodec codec;
    sk::NoiseSchedule schedule;
    std::unique_ptr<sk::RemappedDenoiser> remapped;

    Remote(const sk::RunConfig& cfg, sk::Dims image)
        : session(sk::bridge::open_transport(cfg.bridge, cfg.bridge_timeout_ms)), denoiser(session), codec(session) {
        session.init(image);
        const sk::NoiseSchedule native = session.schedule();
        if (native.steps() == cfg.steering.steps) {
            schedule = native;
            return;
        }
        sk::require(cfg.bridge_subsample, sk::ErrorCode::parameter,
                    "server schedule has " + std::to_string(native.steps()) + " steps, run asks for " +
                        std::to_string(cfg.steering.steps) + " and subsampling is off");
        auto sub = sk::subsample(native, cfg.steering.steps);
        schedule = std::move(sub.schedule);
        remapped = std::make_unique<sk::RemappedDenoiser>(denoiser, std::move(sub.native));
    }

    sk::Denoiser& active() { return remapped ? static_cast<sk::Denoiser&>(*remapped) : denoiser; }
};

std::unique_ptr<sk::Denoiser> make_local_denoiser(const sk::RunConfig& cfg, const sk::Planes& gt_latent,
                                                  const sk::NoiseSchedule& sched) {
    if (cfg.denoiser == "oracle") return std::make_unique<sk::OracleDenoiser>(gt_latent, sched, cfg.prediction);
    if (cfg.denoiser == "biased")
        return std::make_unique<sk::BiasedOracleDenoiser>(gt_latent, sk::parse_bias(cfg.bias),
                                                          sk::parse_prior(cfg.prior), sched, cfg.prediction);
    sk::fail(sk::ErrorCode::parameter, "unknown denoiser '" + cfg.denoiser + "' (oracle|biased|bridge)");
}

sk::Dims parse_size(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x != std::string::npos) return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
    } catch (const std::exception&) {
    }
    sk::fail(sk::ErrorCode::parameter, "size must be <rows>x<cols>, got '" + s + "'");
}

struct CompleteArgs {
    std::string rgb, sparse, gt, out, relative_out, size;
};

int run_complete(const CommonOptions& common, const CompleteArgs& a) {
    const sk::RunConfig cfg = common.resolve();
    sk::Planes rgb;
    sk::DepthMap gt;
    if (!a.rgb.empty()) rgb = sk::read_rgb(a.rgb);
    if (!a.gt.empty()) gt = sk::read_depth(a.gt);
    sk::Dims dims{};
    if (rgb.size() > 0) dims = rgb.dims();
    else if (gt.size() > 0) dims = gt.dims();
    else if (!a.size.empty()) dims = parse_size(a.size);
    else sk::fail(sk::ErrorCode::parameter, "image size unknown: pass --rgb, --gt or --size");
    if (gt.size() > 0)
        sk::require(gt.dims() == dims, sk::ErrorCode::dimension,
                    "ground truth is " + sk::to_string(gt.dims()) + ", image " + sk::to_string(dims));
    const sk::SparseDepth c = sk::read_sparse(a.sparse, dims);

    sk::CompletionResult result;
    if (cfg.denoiser == "bridge") {
        sk::require(!cfg.bridge.empty(), sk::ErrorCode::parameter, "bridge denoiser needs --bridge");
        Remote remote(cfg, dims);
        result = sk::complete(rgb, c, cfg.steering, remote.active(), remote.codec, remote.schedule);
    } else {
        sk::require(gt.size() > 0, sk::ErrorCode::parameter, "the " + cfg.denoiser + " denoiser needs --gt");
        const auto codec = sk::make_codec(cfg.codec);
        const sk::NoiseSchedule sched = sk::build_schedule(cfg.steering.steps, cfg.schedule);
        const sk::Planes gt_latent = sk::encode_depth(sk::normalize_relative(gt), *codec);
        auto denoiser = make_local_denoiser(cfg, gt_latent, sched);
        result = sk::complete(rgb, c, cfg.steering, *denoiser, *codec, sched);
    }
    sk::write_depth(result.depth, a.out);
    if (!a.relative_out.empty()) sk::write_depth(result.relative, a.relative_out);

    std::printf("wrote %s (%s), fit scale %.9g shift %.9g rmse %.6g, %zu positions\n", a.out.c_str(),
                sk::to_string(dims).c_str(), result.fit.scale, result.fit.shift, result.fit.residual_rmse,
                result.positions);
    if (gt.size() > 0) {
        const auto m = sk::compute_metrics(result.depth, gt, {});
        std::printf("rmse %.6f mae %.6f rel %.6f delta1 %.6f over %zu px\n", m.rmse, m.mae, m.rel, m.delta1,
                    m.n_pixels);
    }
    return 0;
}

struct BenchmarkArgs {
    std::string dataset;
    std::size_t synthetic = 0;
    std::string size = "448x608";
    std::string sparsity = "13620";
    bool erase = false;
    std::string erase_area = "medium";
    std::string areas = "large,medium,small";
    std::string ks = "0,0.3";
    std::string jsonl, csv;
    bool quiet = false;
};

int run_benchmark_cmd(const CommonOptions& common, const BenchmarkArgs& a) {
    const sk::RunConfig cfg = common.resolve();
    sk::Protocol protocol;
    protocol.sparsity.clear();
    for (const auto& s : split(a.sparsity)) {
        try {
            protocol.sparsity.push_back(std::stoul(s));
        } catch (const std::exception&) {
            sk::fail(sk::ErrorCode::parameter, "bad sparsity '" + s + "'");
        }
    }
    protocol.erase = a.erase;
    protocol.erase_area = sk::parse_area(a.erase_area);
    protocol.areas.clear();
    for (const auto& s : split(a.areas)) protocol.areas.push_back(sk::parse_area(s));
    protocol.ks.clear();
    for (const auto& s : split(a.ks)) {
        sk::KeyValues kv{{"k", s}};
        sk::RunConfig probe;
        sk::apply(probe, kv);
        protocol.ks.push_back(probe.steering.k);
    }
    protocol.seed = cfg.steering.seed;

    std::vector<sk::BenchmarkScene> scenes;
    if (!a.dataset.empty()) scenes = sk::load_dataset(a.dataset);
    else scenes = sk::synthetic_rooms(a.synthetic, cfg.steering.seed, parse_size(a.size));
    sk::require(!scenes.empty(), sk::ErrorCode::empty_report, "no scenes found");

    std::ostream* progress = a.quiet ? nullptr : &std::cerr;
    sk::BenchmarkReport report;
    if (cfg.denoiser == "bridge") {
        sk::require(!cfg.bridge.empty(), sk::ErrorCode::parameter, "bridge denoiser needs --bridge");
        for (const auto& s : scenes)
            sk::require(s.gt.dims() == scenes.front().gt.dims(), sk::ErrorCode::dimension,
                        "bridge benchmarks need scenes of one size; " + s.id + " differs");
        Remote remote(cfg, scenes.front().gt.dims());
        report = sk::run_benchmark(
            scenes, protocol, cfg.steering,
            [&](const sk::BenchmarkScene&, const sk::Planes&) -> std::unique_ptr<sk::Denoiser> {
                struct Borrowed final : sk::Denoiser {
                    sk::Denoiser& d;
                    explicit Borrowed(sk::Denoiser& d) : d(d) {}
                    sk::PredictionKind kind() const override { return d.kind(); }
                    sk::LatentSample predict(const sk::LatentSample& x, int t, const sk::Planes& r) override {
                        return d.predict(x, t, r);
                    }
                };
                return std::make_unique<Borrowed>(remote.active());
            },
            remote.codec, remote.schedule, progress);
    } else {
        const auto codec = sk::make_codec(cfg.codec);
        const sk::NoiseSchedule sched = sk::build_schedule(cfg.steering.steps, cfg.schedule);
        report = sk::run_benchmark(
            scenes, protocol, cfg.steering,
            [&](const sk::BenchmarkScene&, const sk::Planes& gt_latent) {
                return make_local_denoiser(cfg, gt_latent, sched);
            },
            *codec, sched, progress);
    }

    if (!a.jsonl.empty()) {
        std::ofstream out(a.jsonl);
        sk::require(static_cast<bool>(out), sk::ErrorCode::io, "cannot write " + a.jsonl);
        sk::write_jsonl(out, report);
    }
    if (!a.csv.empty()) {
        std::ofstream out(a.csv);
        sk::require(static_cast<bool>(out), sk::ErrorCode::io, "cannot write " + a.csv);
        sk::write_csv(out, report);
    }
    if (a.jsonl.empty() && a.csv.empty()) sk::write_jsonl(std::cout, report);
    for (const auto& f : report.failures) std::cerr << "failed: " << f << "\n";
    sk::require(!report.aggregate.empty(), sk::ErrorCode::empty_report, "every scene failed");
    return report.failures.empty() ? 0 : 1;
}

struct SynthArgs {
    std::string out_dir;
    std::string scene;
    std::size_t count = 1;
    std::string size = "448x608";
    std::size_t sparsity = 0;
    std::string depth_format = "png";
    std::string rgb_format = "png";
};

int run_synth(const CommonOptions& common, const SynthArgs& a) {
    const sk::RunConfig cfg = common.resolve();
    sk::require(a.depth_format == "png" || a.depth_format == "pgm" || a.depth_format == "pfm",
                sk::ErrorCode::parameter, "depth format must be png, pgm or pfm");
    sk::require(a.rgb_format == "png" || a.rgb_format == "ppm", sk::ErrorCode::parameter,
                "rgb format must be png or ppm");
    std::error_code ec;
    std::filesystem::create_directories(a.out_dir, ec);
    sk::require(!ec, sk::ErrorCode::io, "cannot create " + a.out_dir + ": " + ec.message());

    std::vector<sk::BenchmarkScene> scenes;
    if (!a.scene.empty()) {
        auto [rgb, depth] = sk::synth_scene(sk::read_scene_spec(a.scene));
        scenes.push_back({std::filesystem::path(a.scene).stem().string(), std::move(rgb), std::move(depth)});
    } else {
        scenes = sk::synthetic_rooms(a.count, cfg.steering.seed, parse_size(a.size));
    }
    const std::filesystem::path dir(a.out_dir);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const auto& s = scenes[i];
        sk::write_depth(s.gt, dir / (s.id + "_depth." + a.depth_format));
        sk::write_rgb(s.rgb, dir / (s.id + "_rgb." + a.rgb_format));
        if (a.sparsity > 0) {
            sk::Rng rng = sk::make_stream(cfg.steering.seed, 0x5A0000 + i);
            sk::write_sparse(sk::sample_sparse(s.gt, a.sparsity, rng), dir / (s.id + "_sparse.csv"));
        }
        std::printf("%s %s\n", s.id.c_str(), sk::to_string(s.gt.dims()).c_str());
    }
    return 0;
}

int run_schedule_dump(const CommonOptions& common) {
    const sk::RunConfig cfg = common.resolve();
    const sk::NoiseSchedule s = sk::build_schedule(cfg.steering.steps, cfg.schedule);
    std::printf("t beta alpha alpha_bar sigma2\n");
    for (int t = 1; t <= s.steps(); ++t)
        std::printf("%d %.17g %.17g %.17g %.17g\n", t, s.beta(t), s.alpha(t), s.alpha_bar(t), s.sigma2(t));
    return 0;
}

int run_bridge_ping(const CommonOptions& common, const std::string& size) {
    const sk::RunConfig cfg = common.resolve();
    sk::require(!cfg.bridge.empty(), sk::ErrorCode::parameter, "bridge-ping needs --bridge");
    const sk::Dims dims = parse_size(size);
    sk::bridge::Session session(sk::bridge::open_transport(cfg.bridge, cfg.bridge_timeout_ms));
    const auto& ack = session.init(dims);
    const sk::NoiseSchedule s = session.schedule();
    std::printf("ok %s: T=%d latent=%dx%dx%d scale=%d prediction=%s alpha_bar_T=%.9g\n", cfg.bridge.c_str(),
                s.steps(), ack.latent_channels, ack.latent_rows, ack.latent_cols, ack.scale_factor,
                sk::to_string(ack.kind).c_str(), s.alpha_bar(s.steps()));
    session.shutdown();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Depth completion by steering a diffusion sampler toward sparse measurements"};
    app.name("steerkit");
    app.require_subcommand(1);

    CommonOptions complete_opts, bench_opts, synth_opts, sched_opts, ping_opts;

    CompleteArgs ca;
    auto* complete = app.add_subcommand("complete", "sparse depth (+ image) to a dense depth map");
    complete->add_option("--sparse", ca.sparse, "CSV with header row,col,depth_m")->required()->check(CLI::ExistingFile);
    complete->add_option("--out", ca.out, "output depth (.png, .pgm, .pfm)")->required();
    complete->add_option("--rgb", ca.rgb, "image (.png, .ppm)")->check(CLI::ExistingFile);
    complete->add_option("--gt", ca.gt, "ground-truth depth for the oracle denoisers")->check(CLI::ExistingFile);
    complete->add_option("--relative-out", ca.relative_out, "also write the decoded relative depth");
    complete->add_option("--size", ca.size, "<rows>x<cols> when neither --rgb nor --gt is given");
    complete_opts.attach(*complete);

    BenchmarkArgs ba;
    auto* bench = app.add_subcommand("benchmark", "run the evaluation protocol over a dataset");
    auto* src = bench->add_option("--dataset", ba.dataset, "directory of <id>_depth.* and <id>_rgb.* files");
    bench->add_option("--synthetic", ba.synthetic, "generate this many synthetic rooms instead")->excludes(src);
    bench->add_option("--size", ba.size, "synthetic scene size <rows>x<cols>");
    bench->add_option("--sparsity", ba.sparsity, "comma-separated point counts");
    bench->add_flag("--erase", ba.erase, "erase points inside the erase area after sampling");
    bench->add_option("--erase-area", ba.erase_area, "large|medium|small|<rows>x<cols>");
    bench->add_option("--areas", ba.areas, "comma-separated evaluation areas");
    bench->add_option("--ks", ba.ks, "comma-separated steering strengths; include 0 for the baseline");
    bench->add_option("--jsonl", ba.jsonl, "write line-delimited JSON records here");
    bench->add_option("--csv", ba.csv, "write CSV records here");
    bench->add_flag("--quiet", ba.quiet, "no per-run progress on stderr");
    bench_opts.attach(*bench);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "render synthetic scenes to files");
    synth->add_option("--out", sa.out_dir, "output directory")->required();
    synth->add_option("--scene", sa.scene, "JSON scene description (default: random rooms)")
        ->check(CLI::ExistingFile);
    synth->add_option("--count", sa.count, "number of random rooms");
    synth->add_option("--size", sa.size, "<rows>x<cols> for random rooms");
    synth->add_option("--sparsity", sa.sparsity, "also write <id>_sparse.csv with this many points");
    synth->add_option("--depth-format", sa.depth_format, "png|pgm|pfm");
    synth->add_option("--rgb-format", sa.rgb_format, "png|ppm");
    synth_opts.attach(*synth);

    auto* sched = app.add_subcommand("schedule-dump", "print the noise schedule tables");
    sched_opts.attach(*sched);

    std::string ping_size = "448x608";
    auto* ping = app.add_subcommand("bridge-ping", "handshake with a bridge server and print its schedule");
    ping->add_option("--size", ping_size, "image size to negotiate, <rows>x<cols>");
    ping_opts.attach(*ping);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << "\n" << app.help();
        return 2;
    }

    try {
        if (complete->parsed()) return run_complete(complete_opts, ca);
        if (bench->parsed()) return run_benchmark_cmd(bench_opts, ba);
        if (synth->parsed()) return run_synth(synth_opts, sa);
        if (sched->parsed()) return run_schedule_dump(sched_opts);
        if (ping->parsed()) return run_bridge_ping(ping_opts, ping_size);
    } catch (const sk::Error& e) {
        std::cerr << "steerkit: " << e.what() << "\n";
        return sk::exit_status(e.code());
    } catch (const std::exception& e) {
        std::cerr << "steerkit: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
