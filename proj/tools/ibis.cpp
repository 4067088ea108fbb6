#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "ibis/config.hpp"
#include "ibis/grpo.hpp"
#include "ibis/parallel.hpp"
#include "ibis/records.hpp"
#include "ibis/remote.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace ibis;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string manifest_path;
};

struct Manifest {
    explicit Manifest(std::string name) : subcommand(std::move(name)) {}

    std::string subcommand;
    std::string fingerprint;
    std::uint64_t seed = 0;
    ordered_json inputs = ordered_json::object();
    ordered_json outputs = ordered_json::object();
    ordered_json counts = ordered_json::object();
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    void write(const std::string& path) const {
        ordered_json j;
        j["subcommand"] = subcommand;
        j["config_fingerprint"] = fingerprint;
        j["seed"] = seed;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["duration_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        j["counts"] = counts;
        write_file(path, j.dump(2) + "\n");
    }
};

Config load_effective_config(const Common& c) {
    std::string path = c.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("IBIS_CONFIG")) path = env;
    }
    return path.empty() ? Config{} : load_config(path);
}

std::string manifest_path(const Common& c, const std::string& out_dir, const std::string& sub) {
    if (!c.manifest_path.empty()) return c.manifest_path;
    if (!out_dir.empty()) return (fs::path(out_dir) / "manifest.json").string();
    return fmt::format("manifest-{}.json", sub);
}

// Shortest round-trip form with a trailing ".0" for integral values.
std::string py_float(double v) {
    std::string s = fmt::format("{}", v);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string as_text(const Bytes& b) { return {reinterpret_cast<const char*>(b.data()), b.size()}; }

std::unique_ptr<Segmenter> segmenter_or_usage(const std::string& spec, const Config& cfg) {
    try {
        return make_segmenter(spec, cfg.segmenter);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

template <typename T>
T unwrap_simulation(const std::function<T()>& fn) {
    try {
        return fn();
    } catch (const SimulationError& e) {
        if (e.cause) std::rethrow_exception(e.cause);
        throw;
    }
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "JSON config (default: $IBIS_CONFIG, else built-in defaults)");
    sub->add_option("--seed", c.seed, "base seed");
    sub->add_option("--manifest", c.manifest_path, "run manifest path");
}

int gen_synthetic(const Common& c, int n, const std::string& out) {
    Manifest m("gen-synthetic");
    const Config cfg = load_effective_config(c);
    m.fingerprint = fingerprint_config(cfg);
    m.seed = c.seed;
    const auto samples = make_synthetic_corpus(n, c.seed, cfg.datagen.shapes);
    write_samples(out, samples);
    m.outputs["samples"] = (fs::path(out) / "samples.jsonl").string();
    m.counts["samples"] = samples.size();
    m.write(manifest_path(c, out, "gen-synthetic"));
    fmt::print("wrote {} samples to {}\n", samples.size(), out);
    return 0;
}

int simulate(const Common& c, const std::string& samples_dir, const std::string& seg_spec, const std::string& out) {
    Manifest m("simulate");
    const Config cfg = load_effective_config(c);
    const auto seg = segmenter_or_usage(seg_spec, cfg);
    m.fingerprint = fingerprint_config(cfg);
    m.seed = c.seed;
    const auto samples = read_samples(samples_dir);
    const ArtifactStore store(fs::path(out) / "blobs");
    std::vector<DatasetRecord> records(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        Rng rng(mix_seed(c.seed, {0x73696dULL, i}));
        records[i] = unwrap_simulation<DatasetRecord>([&] {
            return make_gold_record(samples[i], *seg, cfg.oracle, cfg.datagen.templates.ratios, rng, &store);
        });
        records[i].config_fingerprint = m.fingerprint;
    });
    const std::string path = (fs::path(out) / "trajectories.jsonl").string();
    write_file(path, write_jsonl(records));

    int converged = 0;
    double iou_sum = 0.0, dsc_sum = 0.0, len_sum = 0.0;
    for (const DatasetRecord& r : records) {
        converged += r.final_iou >= cfg.oracle.iou_threshold ? 1 : 0;
        iou_sum += r.final_iou;
        dsc_sum += r.final_dsc;
        len_sum += r.length();
    }
    const double n = std::max<double>(1.0, static_cast<double>(records.size()));
    fmt::print("episodes={} converged={} ({:.1f}%) mean_iou={:.4f} mean_dsc={:.4f} mean_length={:.2f}\n", records.size(),
               converged, 100.0 * converged / n, iou_sum / n, dsc_sum / n, len_sum / n);
    m.inputs["samples"] = samples_dir;
    m.inputs["segmenter"] = seg_spec;
    m.outputs["trajectories"] = path;
    m.counts["episodes"] = records.size();
    m.counts["records"] = records.size();
    m.counts["converged"] = converged;
    m.write(manifest_path(c, out, "simulate"));
    return 0;
}

int build_dataset(const Common& c, const std::string& samples_dir, const std::string& seg_spec, const std::string& out) {
    Manifest m("build-dataset");
    const Config cfg = load_effective_config(c);
    const auto seg = segmenter_or_usage(seg_spec.empty() ? cfg.segmenter.kind : seg_spec, cfg);
    m.fingerprint = fingerprint_config(cfg);
    m.seed = c.seed;
    const auto samples = read_samples(samples_dir);
    const ArtifactStore store(fs::path(out) / "blobs");
    ColdStartOptions opts;
    opts.oracle = cfg.oracle;
    opts.filter = cfg.datagen.filter;
    opts.templates = cfg.datagen.templates;
    opts.seed = c.seed;
    opts.store = &store;
    opts.config_fingerprint = m.fingerprint;
    const ColdStartResult res = build_cold_start(samples, *seg, opts);
    const std::string data = (fs::path(out) / "dataset.jsonl").string();
    const std::string stats = (fs::path(out) / "stats.json").string();
    write_file(data, write_jsonl(res.records));
    write_file(stats, stats_to_json(res.stats, res.rejected));
    fmt::print("{}", format_stats_tables(res.stats));
    fmt::print("records={} rejected={}\n", res.records.size(), res.rejected.size());
    m.inputs["samples"] = samples_dir;
    m.outputs["dataset"] = data;
    m.outputs["stats"] = stats;
    m.counts["episodes"] = samples.size();
    m.counts["records"] = res.records.size();
    m.counts["rejects"] = res.rejected.size();
    m.write(manifest_path(c, out, "build-dataset"));
    return 0;
}

int eval_rewards(const Common& c, const std::string& traj_path, const std::string& gt_dir, std::string store_dir,
                 const std::string& out) {
    Manifest m("eval-rewards");
    const Config cfg = load_effective_config(c);
    m.fingerprint = fingerprint_config(cfg);
    m.seed = c.seed;
    if (store_dir.empty()) store_dir = (fs::path(traj_path).parent_path() / "blobs").string();
    const ArtifactStore store(store_dir);
    const auto records = read_jsonl(as_text(read_file(traj_path)), &store);
    std::map<std::string, Mask> gts;
    for (Sample& s : read_samples(gt_dir)) gts.emplace(s.id, std::move(s.gt));
    std::vector<RewardReportEntry> entries;
    double sum = 0.0;
    for (const DatasetRecord& r : records) {
        const auto it = gts.find(r.sample_id);
        if (it == gts.end()) throw DataError(fmt::format("record {}: no ground truth for sample {}", r.id, r.sample_id));
        const RewardBreakdown b = aggregate(r.traj, it->second, std::nullopt, cfg.rewards);
        fmt::print("{} total {}\n", r.id, py_float(b.total));
        sum += b.total;
        entries.push_back({r.id, b});
    }
    if (!entries.empty()) fmt::print("mean total {}\n", py_float(sum / static_cast<double>(entries.size())));
    write_file(out, reward_report_json(entries));
    m.inputs["trajectories"] = traj_path;
    m.inputs["gt"] = gt_dir;
    m.outputs["report"] = out;
    m.counts["records"] = entries.size();
    m.write(manifest_path(c, fs::path(out).parent_path().string(), "eval-rewards"));
    return 0;
}

int score(const Common& c, const std::string& pred, const std::string& gt) {
    Manifest m("score");
    const Config cfg = load_effective_config(c);
    m.fingerprint = fingerprint_config(cfg);
    const Mask p = decode_mask_png(read_file(pred));
    const Mask g = decode_mask_png(read_file(gt));
    fmt::print("iou={} dsc={}\n", py_float(iou(p, g)), py_float(dsc(p, g)));
    m.inputs["pred"] = pred;
    m.inputs["gt"] = gt;
    m.write(manifest_path(c, "", "score"));
    return 0;
}

int train_toy(const Common& c, int tasks, int iters, int group, double step_size, const std::string& out) {
    Manifest m("train-toy");
    const Config cfg = load_effective_config(c);
    m.fingerprint = fingerprint_config(cfg);
    m.seed = c.seed;
    std::vector<ToyTask> toy;
    for (Sample& s : make_synthetic_corpus(tasks, mix_seed(c.seed, {0x746f79ULL}), cfg.datagen.shapes)) {
        toy.push_back({std::move(s.image), std::move(s.gt)});
    }
    const DiscSegmenter seg(cfg.segmenter.disc_radius);
    ToyTrainingOptions opts;
    opts.iterations = iters;
    opts.group_size = group;
    opts.step_size = step_size;
    opts.seed = c.seed;
    opts.limits = cfg.limits;
    opts.rewards = cfg.rewards;
    const auto curve = train_toy_policy(toy, seg, ToyPolicyParams{}, opts);
    const std::string path = (fs::path(out) / "curve.csv").string();
    write_file(path, curve_csv(curve));
    fmt::print("initial mean reward {:.4f}, final mean reward {:.4f}\n", curve.front().mean_reward, curve.back().mean_reward);
    m.outputs["curve"] = path;
    m.counts["episodes"] = static_cast<std::size_t>(iters) * static_cast<std::size_t>(tasks) * static_cast<std::size_t>(group);
    m.counts["records"] = curve.size();
    m.write(manifest_path(c, out, "train-toy"));
    return 0;
}

int render(const Common& c, const std::string& traj_path, const std::string& samples_dir, const std::string& out) {
    Manifest m("render");
    const Config cfg = load_effective_config(c);
    m.fingerprint = fingerprint_config(cfg);
    const ArtifactStore store(fs::path(traj_path).parent_path() / "blobs");
    const auto records = read_jsonl(as_text(read_file(traj_path)), &store);
    std::map<std::string, Image> images;
    for (Sample& s : read_samples(samples_dir)) images.emplace(s.id, std::move(s.image));
    const OverlayStyle style;
    std::size_t written = 0;
    for (const DatasetRecord& r : records) {
        const auto it = images.find(r.sample_id);
        if (it == images.end()) throw DataError(fmt::format("record {}: unknown sample {}", r.id, r.sample_id));
        for (std::size_t k = 0; k < r.traj.steps.size(); ++k) {
            const Image frame = overlay(to_rgb(it->second), r.traj.steps[k].mask, style.alpha, style.palette[0]);
            write_file((fs::path(out) / r.id / fmt::format("step_{:02d}.png", k)).string(), encode_image_png(frame));
            ++written;
        }
    }
    fmt::print("rendered {} frames for {} records\n", written, records.size());
    m.inputs["trajectory"] = traj_path;
    m.outputs["frames"] = out;
    m.counts["records"] = records.size();
    m.counts["frames"] = written;
    m.write(manifest_path(c, out, "render"));
    return 0;
}

int serve(const Common& c, int port, const std::string& backend) {
    Manifest m("serve-mock-segmenter");
    const Config cfg = load_effective_config(c);
    m.fingerprint = fingerprint_config(cfg);
    std::shared_ptr<const Segmenter> seg = segmenter_or_usage(backend, cfg);
    if (seg->name() == "remote") throw UsageError("the mock server needs a local backend");
    const std::string tag = seg->name() == "disc" ? DiscSegmenter::kTag : SeededSegmenter::kTag;
    MockSegmenterServer server(seg, tag);
    m.inputs["backend"] = backend;
    m.inputs["port"] = port;
    m.write(manifest_path(c, "", "serve-mock-segmenter"));
    fmt::print("serving {} on 127.0.0.1:{}\n", backend, port);
    std::fflush(stdout);
    server.run("127.0.0.1", port);
    return 0;
}

int stats(const Common& c, const std::string& dataset, const std::string& out) {
    Manifest m("stats");
    const Config cfg = load_effective_config(c);
    m.fingerprint = fingerprint_config(cfg);
    const auto records = read_jsonl(as_text(read_file(dataset)));
    const DatasetStats st = compute_stats(records);
    fmt::print("{}", format_stats_tables(st));
    if (!out.empty()) {
        write_file(out, stats_to_json(st, {}));
        m.outputs["stats"] = out;
    }
    m.inputs["dataset"] = dataset;
    m.counts["records"] = records.size();
    m.write(manifest_path(c, "", "stats"));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interactive segmentation agent toolkit"};
    app.require_subcommand(1);
    Common common;

    int n = 0;
    std::string out, samples_dir, seg_spec, traj, gt, store_dir, pred, dataset, backend = "disc";
    int port = 8080, tasks = 10, iters = 200, group = 4;
    double step_size = 0.05;

    auto* gen = app.add_subcommand("gen-synthetic", "generate a synthetic blob corpus");
    gen->add_option("--n", n, "sample count")->required()->check(CLI::PositiveNumber);
    gen->add_option("--out", out, "output directory")->required();

    auto* sim = app.add_subcommand("simulate", "run oracle trajectories");
    sim->add_option("--samples", samples_dir)->required();
    sim->add_option("--segmenter", seg_spec, "disc | seeded | remote:URL")->required();
    sim->add_option("--out", out)->required();

    auto* build = app.add_subcommand("build-dataset", "build the cold-start dataset");
    build->add_option("--samples", samples_dir)->required();
    build->add_option("--segmenter", seg_spec, "defaults to segmenter.kind from the config");
    build->add_option("--out", out)->required();

    auto* ev = app.add_subcommand("eval-rewards", "score trajectories with the reward function");
    ev->add_option("--trajectories", traj)->required();
    ev->add_option("--gt", gt, "sample directory holding the ground truth")->required();
    ev->add_option("--store", store_dir, "blob store (default: blobs/ next to the trajectories)");
    ev->add_option("--out", out, "reward report JSON")->required();

    auto* sc = app.add_subcommand("score", "IoU and DSC between two mask PNGs");
    sc->add_option("--pred", pred)->required();
    sc->add_option("--gt", gt)->required();

    auto* tt = app.add_subcommand("train-toy", "toy group-relative policy training");
    tt->add_option("--tasks", tasks)->check(CLI::PositiveNumber);
    tt->add_option("--iters", iters)->check(CLI::PositiveNumber);
    tt->add_option("--group-size", group)->check(CLI::Range(2, 1024));
    tt->add_option("--step-size", step_size);
    tt->add_option("--out", out)->required();

    auto* rd = app.add_subcommand("render", "write overlay frames for stored trajectories");
    rd->add_option("--trajectory", traj)->required();
    rd->add_option("--samples", samples_dir)->required();
    rd->add_option("--out", out)->required();

    auto* sv = app.add_subcommand("serve-mock-segmenter", "serve a local segmenter over HTTP");
    sv->add_option("--port", port)->check(CLI::Range(0, 65535));
    sv->add_option("--backend", backend, "disc | seeded");

    auto* st = app.add_subcommand("stats", "dataset statistics tables");
    st->add_option("--dataset", dataset)->required();
    st->add_option("--out", out, "stats JSON");

    for (CLI::App* sub : {gen, sim, build, ev, sc, tt, rd, sv, st}) add_common(sub, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*gen) return gen_synthetic(common, n, out);
        if (*sim) return simulate(common, samples_dir, seg_spec, out);
        if (*build) return build_dataset(common, samples_dir, seg_spec, out);
        if (*ev) return eval_rewards(common, traj, gt, store_dir, out);
        if (*sc) return score(common, pred, gt);
        if (*tt) return train_toy(common, tasks, iters, group, step_size, out);
        if (*rd) return render(common, traj, samples_dir, out);
        if (*sv) return serve(common, port, backend);
        if (*st) return stats(common, dataset, out);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        if (!e.payload.empty()) std::cerr << "payload: " << e.payload << "\n";
        return 3;
    } catch (const ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        if (!e.payload.empty()) std::cerr << "payload: " << e.payload << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error at '" << e.path << "': " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
