#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "steerkit/codec.hpp"
#include "steerkit/ddpm.hpp"
#include "steerkit/denoisers.hpp"
#include "steerkit/geometry.hpp"
#include "steerkit/grid.hpp"
#include "steerkit/scene.hpp"
#include "steerkit/steering.hpp"

namespace steerkit {

// Error sums are kept so that reports over several scenes pool pixel-weighted.
struct MetricsReport {
    double rmse = 0.0;
    double mae = 0.0;
    double rel = 0.0;
    double delta1 = 0.0;
    std::size_t n_pixels = 0;

    double sum_sq = 0.0;
    double sum_abs = 0.0;
    double sum_rel = 0.0;
    std::size_t n_delta1 = 0;

    void finalize() {
        require(n_pixels > 0, ErrorCode::empty_evaluation, "no pixels to evaluate");
        const double n = static_cast<double>(n_pixels);
        rmse = std::sqrt(sum_sq / n);
        mae = sum_abs / n;
        rel = sum_rel / n;
        delta1 = static_cast<double>(n_delta1) / n;
    }

    MetricsReport& operator+=(const MetricsReport& o) {
        sum_sq += o.sum_sq;
        sum_abs += o.sum_abs;
        sum_rel += o.sum_rel;
        n_delta1 += o.n_delta1;
        n_pixels += o.n_pixels;
        return *this;
    }
};

inline constexpr double delta1_threshold = 1.25;

// Metrics over pixels where the mask is set. An empty mask grid means every pixel.
inline MetricsReport compute_metrics(const Grid<double>& pred, const Grid<double>& gt, const Mask& mask) {
    require(pred.dims() == gt.dims(), ErrorCode::dimension,
            "prediction " + to_string(pred.dims()) + " vs ground truth " + to_string(gt.dims()));
    require(mask.empty() || mask.dims() == gt.dims(), ErrorCode::dimension, "mask dims differ from ground truth");
    MetricsReport m;
    auto p = pred.values(), g = gt.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!mask.empty() && !mask.values()[i]) continue;
        require(g[i] > 0.0, ErrorCode::data, "nonpositive ground truth inside the evaluation mask");
        const double e = p[i] - g[i];
        m.sum_sq += e * e;
        m.sum_abs += std::abs(e);
        m.sum_rel += std::abs(e) / g[i];
        if (std::max(p[i] / g[i], g[i] / p[i]) < delta1_threshold && p[i] > 0.0) ++m.n_delta1;
        ++m.n_pixels;
    }
    m.finalize();
    return m;
}

struct EvaluationArea {
    enum class Kind { large, medium, small, custom };
    Kind kind = Kind::large;
    int rows = 0;  // custom only
    int cols = 0;

    static EvaluationArea large() { return {Kind::large, 0, 0}; }
    static EvaluationArea medium() { return {Kind::medium, 248, 408}; }
    static EvaluationArea small() { return {Kind::small, 198, 358}; }
    static EvaluationArea custom(int rows, int cols) { return {Kind::custom, rows, cols}; }

    // large is the whole frame (448 x 608 for the standard crop)
    Dims rect(Dims image) const { return kind == Kind::large ? image : Dims{rows, cols}; }

    std::string name() const {
        switch (kind) {
            case Kind::large: return "large";
            case Kind::medium: return "medium";
            case Kind::small: return "small";
            case Kind::custom: return std::to_string(rows) + "x" + std::to_string(cols);
        }
        return "?";
    }
};

inline EvaluationArea parse_area(const std::string& s) {
    if (s == "large") return EvaluationArea::large();
    if (s == "medium") return EvaluationArea::medium();
    if (s == "small") return EvaluationArea::small();
    const auto x = s.find('x');
    if (x != std::string::npos) {
        try {
            return EvaluationArea::custom(std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1)));
        } catch (const std::exception&) {
        }
    }
    fail(ErrorCode::parameter, "unknown area '" + s + "' (large|medium|small|<rows>x<cols>)");
}

struct Rect {
    int row0 = 0, col0 = 0, rows = 0, cols = 0;
    bool contains(int r, int c) const { return r >= row0 && r < row0 + rows && c >= col0 && c < col0 + cols; }
};

inline Rect area_rect(const EvaluationArea& area, Dims image) {
    const Dims d = area.rect(image);
    require(d.rows > 0 && d.cols > 0 && d.rows <= image.rows && d.cols <= image.cols, ErrorCode::parameter,
            "area " + area.name() + " does not fit in " + to_string(image));
    return {(image.rows - d.rows) / 2, (image.cols - d.cols) / 2, d.rows, d.cols};
}

inline Mask area_mask(const EvaluationArea& area, Dims image) {
    const Rect r = area_rect(area, image);
    Mask m(image, 0);
    for (int i = r.row0; i < r.row0 + r.rows; ++i)
        for (int j = r.col0; j < r.col0 + r.cols; ++j) m(i, j) = 1;
    return m;
}

// Pixels with positive ground truth inside the area.
inline Mask evaluation_mask(const EvaluationArea& area, const Grid<double>& gt) {
    Mask m = area_mask(area, gt.dims());
    auto mv = m.values();
    auto g = gt.values();
    for (std::size_t i = 0; i < mv.size(); ++i)
        if (!(g[i] > 0.0)) mv[i] = 0;
    return m;
}

// n distinct valid pixels, uniformly without replacement, in draw order.
// Pixels in `exclude` are still drawn (so the draw sequence is the same) but
// dropped from the result; this makes sample-then-erase identical to sampling
// with the erased area excluded.
inline SparseDepth sample_sparse(const Grid<double>& gt, std::size_t n, Rng& rng, const Mask& exclude = {}) {
    std::vector<std::int32_t> valid;
    auto g = gt.values();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] > 0.0 && std::isfinite(g[i])) valid.push_back(static_cast<std::int32_t>(i));
    require(valid.size() >= n, ErrorCode::data,
            "asked for " + std::to_string(n) + " points, only " + std::to_string(valid.size()) + " valid pixels");
    std::vector<DepthPoint> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, valid.size() - 1);
        std::swap(valid[i], valid[pick(rng)]);
        const std::size_t idx = static_cast<std::size_t>(valid[i]);
        if (!exclude.empty() && exclude.values()[idx]) continue;
        pts.push_back({static_cast<int>(idx / gt.cols()), static_cast<int>(idx % gt.cols()), g[idx]});
    }
    return SparseDepth(gt.dims(), std::move(pts));
}

inline SparseDepth erase_region(const SparseDepth& c, const EvaluationArea& area) {
    const Rect r = area_rect(area, c.dims());
    std::vector<DepthPoint> kept;
    for (const auto& p : c.points())
        if (!r.contains(p.row, p.col)) kept.push_back(p);
    return SparseDepth(c.dims(), std::move(kept));
}

// Min-max map of the valid depths onto [-1, 1]; invalid pixels take the
// nearest valid value so the latent stays finite.
inline DepthMap normalize_relative(const Grid<double>& gt) {
    double lo = INFINITY, hi = -INFINITY;
    Mask valid(gt.dims(), 0);
    for (int r = 0; r < gt.rows(); ++r)
        for (int c = 0; c < gt.cols(); ++c)
            if (gt(r, c) > 0.0 && std::isfinite(gt(r, c))) {
                lo = std::min(lo, gt(r, c));
                hi = std::max(hi, gt(r, c));
                valid(r, c) = 1;
            }
    require(lo <= hi, ErrorCode::data, "depth map has no valid pixels");
    const double span = hi > lo ? hi - lo : 1.0;
    const DistanceField df = distance_transform(valid);
    DepthMap out(gt.dims());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = gt.values()[static_cast<std::size_t>(df.nearest.values()[i])];
        out.values()[i] = (v - lo) / span * 2.0 - 1.0;
    }
    return out;
}

struct BenchmarkScene {
    std::string id;
    Planes rgb;  // may be empty
    DepthMap gt;
};

inline std::vector<BenchmarkScene> synthetic_rooms(std::size_t count, std::uint64_t seed, Dims dims = {448, 608}) {
    std::vector<BenchmarkScene> out;
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = make_stream(seed, 0x5CE0000 + i);
        auto [rgb, depth] = synth_scene(random_room(rng, dims));
        char id[32];
        std::snprintf(id, sizeof id, "room%04zu", i);
        out.push_back({id, std::move(rgb), std::move(depth)});
    }
    return out;
}

struct Protocol {
    std::vector<std::size_t> sparsity{13620};
    bool erase = false;
    EvaluationArea erase_area = EvaluationArea::medium();
    std::vector<EvaluationArea> areas{EvaluationArea::large(), EvaluationArea::medium(), EvaluationArea::small()};
    std::vector<double> ks{0.0, 0.3};
    std::uint64_t seed = 0;
};

struct BenchmarkRecord {
    std::string scene_id;
    std::string area;
    std::size_t n_depth = 0;
    double k = 0.0;
    MetricsReport metrics;
    double runtime_ms = 0.0;
};

struct BenchmarkReport {
    std::vector<BenchmarkRecord> scenes;
    std::vector<BenchmarkRecord> aggregate;  // scene_id "aggregate"; n_depth is the nominal sparsity
    std::vector<std::string> failures;

    const BenchmarkRecord* find_aggregate(const std::string& area, std::size_t sparsity, double k) const {
        for (const auto& r : aggregate)
            if (r.area == area && r.n_depth == sparsity && r.k == k) return &r;
        return nullptr;
    }
};

// Builds the denoiser for one scene. gt_latent is the encoded relative ground truth.
// The result is reused for every run on that scene, so predict() must not keep state.
using DenoiserFactory = std::function<std::unique_ptr<Denoiser>(const BenchmarkScene&, const Planes& gt_latent)>;

inline BenchmarkReport run_benchmark(const std::vector<BenchmarkScene>& scenes, const Protocol& protocol,
                                     const SteeringConfig& config, const DenoiserFactory& make_denoiser,
                                     const LatentCodec& codec, const NoiseSchedule& sched,
                                     std::ostream* progress = nullptr) {
    require(!scenes.empty(), ErrorCode::empty_report, "no scenes to benchmark");
    require(!protocol.sparsity.empty() && !protocol.areas.empty() && !protocol.ks.empty(), ErrorCode::parameter,
            "protocol needs sparsity levels, areas and k values");
    BenchmarkReport report;
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, MetricsReport> pooled;  // (sparsity, area, k)

    for (std::size_t si = 0; si < scenes.size(); ++si) {
        const auto& scene = scenes[si];
        try {
            const Planes gt_latent = encode_depth(normalize_relative(scene.gt), codec);
            auto denoiser = make_denoiser(scene, gt_latent);
            std::vector<BenchmarkRecord> local;
            std::map<std::tuple<std::size_t, std::size_t, std::size_t>, MetricsReport> local_pool;
            for (std::size_t ni = 0; ni < protocol.sparsity.size(); ++ni) {
                Rng rng = make_stream(protocol.seed, (si << 8) + ni + 0x100000);
                const Mask erase = protocol.erase ? area_mask(protocol.erase_area, scene.gt.dims()) : Mask{};
                const SparseDepth c = sample_sparse(scene.gt, protocol.sparsity[ni], rng, erase);
                for (std::size_t ki = 0; ki < protocol.ks.size(); ++ki) {
                    SteeringConfig cfg = config;
                    cfg.k = protocol.ks[ki];
                    cfg.seed = config.seed + si;
                    const auto t0 = std::chrono::steady_clock::now();
                    const CompletionResult res = complete(scene.rgb, c, cfg, *denoiser, codec, sched);
                    const double ms =
                        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
                    for (std::size_t ai = 0; ai < protocol.areas.size(); ++ai) {
                        const auto& area = protocol.areas[ai];
                        const MetricsReport m = compute_metrics(res.depth, scene.gt, evaluation_mask(area, scene.gt));
                        local.push_back({scene.id, area.name(), c.size(), cfg.k, m, ms});
                        local_pool[{ni, ai, ki}] += m;
                    }
                    if (progress)
                        *progress << scene.id << " n=" << c.size() << " k=" << cfg.k << " rmse(" << local.back().area
                                   << ")=" << local.back().metrics.rmse << " " << static_cast<long>(ms) << "ms\n";
                }
            }
            report.scenes.insert(report.scenes.end(), local.begin(), local.end());
            for (auto& [key, m] : local_pool) pooled[key] += m;
        } catch (const Error& e) {
            report.failures.push_back(scene.id + ": " + e.what());
        }
    }
    for (auto& [key, m] : pooled) {
        const auto [ni, ai, ki] = key;
        m.finalize();
        report.aggregate.push_back(
            {"aggregate", protocol.areas[ai].name(), protocol.sparsity[ni], protocol.ks[ki], m, 0.0});
    }
    return report;
}

inline nlohmann::json to_json(const BenchmarkRecord& r) {
    return {{"scene_id", r.scene_id},         {"area", r.area},
            {"n_depth", r.n_depth},           {"k", r.k},
            {"rmse", r.metrics.rmse},         {"mae", r.metrics.mae},
            {"rel", r.metrics.rel},           {"delta1", r.metrics.delta1},
            {"n_pixels", r.metrics.n_pixels}, {"runtime_ms", r.runtime_ms}};
}

inline void write_jsonl(std::ostream& os, const BenchmarkReport& report) {
    for (const auto* list : {&report.scenes, &report.aggregate})
        for (const auto& r : *list) os << to_json(r).dump() << '\n';
}

inline void write_csv(std::ostream& os, const BenchmarkReport& report) {
    os << "scene_id,area,n_depth,k,rmse,mae,rel,delta1,n_pixels,runtime_ms\n";
    char buf[512];
    for (const auto* list : {&report.scenes, &report.aggregate})
        for (const auto& r : *list) {
            std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%.3f\n", r.scene_id.c_str(),
                          r.area.c_str(), r.n_depth, r.k, r.metrics.rmse, r.metrics.mae, r.metrics.rel,
                          r.metrics.delta1, r.metrics.n_pixels, r.runtime_ms);
            os << buf;
        }
}

}  // namespace steerkit
