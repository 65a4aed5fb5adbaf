#include "mudseg/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "mudseg/dataset.hpp"
#include "mudseg/error.hpp"
#include "mudseg/forest.hpp"
#include "mudseg/image_io.hpp"
#include "mudseg/metrics.hpp"
#include "mudseg/overlay.hpp"
#include "mudseg/parallel.hpp"
#include "mudseg/pipeline.hpp"
#include "mudseg/service.hpp"

namespace mudseg {

namespace {

/// Thrown for problems detected before any work starts.
struct UsageError : Error {
    using Error::Error;
};

bool is_image_file(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".pgm";
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Image files in a directory (sorted), or the file itself.
std::vector<fs::path> list_images(const fs::path& input) {
    if (!fs::exists(input)) throw UsageError("input not found: " + input.string());
    if (fs::is_regular_file(input)) return {input};
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(input)) {
        if (!e.is_regular_file() || !is_image_file(e.path())) continue;
        const auto stem = e.path().stem().string();
        if (has_suffix(stem, "_mask") || has_suffix(stem, "_overlay")) continue;
        out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Stem with a trailing "_mask" removed, used to pair predictions with truth.
std::string mask_key(const fs::path& p) {
    auto stem = p.stem().string();
    if (has_suffix(stem, "_mask")) stem.resize(stem.size() - 5);
    return stem;
}

std::map<std::string, fs::path> list_masks(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir.string());
    std::map<std::string, fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file() || !is_image_file(e.path())) continue;
        const auto key = mask_key(e.path());
        if (out.count(key)) throw UsageError("ambiguous masks for '" + key + "' in " + dir.string());
        out.emplace(key, e.path());
    }
    return out;
}

std::string read_text(const fs::path& p) {
    const auto bytes = read_file(p);
    return {bytes.begin(), bytes.end()};
}

PipelineParams load_params(const std::string& path) {
    if (path.empty()) return default_params();
    try {
        return params_from_json(read_text(path));
    } catch (const Error& e) {
        throw UsageError(path + ": " + e.what());
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + dir.string());
}

void refuse_overwrite(const std::vector<fs::path>& outputs, bool force) {
    if (force) return;
    for (const auto& p : outputs) {
        if (fs::exists(p)) throw IoError(p.string() + " exists (use --force to overwrite)");
    }
}

struct ItemLog {
    bool ok = true;
    std::string text;
};

int report_items(const std::vector<ItemLog>& logs, std::ostream& out, std::ostream& err) {
    int failed = 0;
    for (const auto& l : logs) {
        (l.ok ? out : err) << l.text << '\n';
        failed += l.ok ? 0 : 1;
    }
    if (failed) err << failed << " of " << logs.size() << " item(s) failed\n";
    return failed ? kExitItemFailed : kExitOk;
}

// --- segment ---

struct SegmentOptions {
    std::string input;
    std::string params;
    std::string out;
    int jobs = 1;
    double alpha = kDefaultOverlayAlpha;
    bool force = false;
};

int cmd_segment(const SegmentOptions& o, std::ostream& out, std::ostream& err) {
    const auto params = load_params(o.params);
    const auto images = list_images(o.input);
    if (images.empty()) {
        err << "warning: no images found in " << o.input << '\n';
        return kExitOk;
    }
    const fs::path out_dir = o.out;
    ensure_dir(out_dir);
    const std::string manifest = params_to_json(params);

    std::vector<ItemLog> logs(images.size());
    parallel_for(images.size(), o.jobs, [&](std::size_t i) {
        const auto& path = images[i];
        const auto stem = path.stem().string();
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const std::vector<fs::path> outputs{out_dir / (stem + "_mask.png"), out_dir / (stem + "_stats.csv"),
                                                out_dir / (stem + "_overlay.png"), out_dir / (stem + "_params.json")};
            refuse_overwrite(outputs, o.force);
            ImageMeta meta;
            const auto img = load_gray(path, &meta);
            if (!img.pitch_um()) throw MetadataError("missing sidecar " + sidecar_path(path).string());
            const auto result = run_pipeline(img, meta, params);
            save_mask(result.mask, outputs[0]);
            write_text(outputs[1], stats_to_csv(result.stats));
            save_rgba(overlay(img, result.mask, o.alpha), outputs[2]);
            write_text(outputs[3], manifest);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::ostringstream os;
            os << path.filename().string() << ": " << img.width() << "x" << img.height() << " in " << std::fixed
               << std::setprecision(3) << secs << " s";
            logs[i].text = os.str();
        } catch (const std::exception& e) {
            logs[i] = {false, "error: " + path.filename().string() + ": " + e.what()};
        }
    });
    return report_items(logs, out, err);
}

// --- dataset ---

struct DatasetOptions {
    std::string input;
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    bool force = false;
};

int cmd_dataset(const DatasetOptions& o, std::ostream& out, std::ostream& err) {
    DatasetConfig config;
    if (!o.config.empty()) {
        try {
            config = dataset_config_from_json(read_text(o.config));
        } catch (const Error& e) {
            throw UsageError(o.config + ": " + e.what());
        }
    }
    if (o.seed) config.seed = *o.seed;
    const fs::path src = o.input;
    const auto image_dir = src / "images";
    const auto mask_dir = src / "masks";
    if (!fs::is_directory(image_dir) || !fs::is_directory(mask_dir)) {
        throw UsageError(o.input + " must contain images/ and masks/");
    }
    const fs::path root = o.out;
    if (!o.force && fs::exists(root / "manifest.json")) {
        err << "error: " << (root / "manifest.json").string() << " exists (use --force to overwrite)\n";
        return kExitItemFailed;
    }
    ensure_dir(root);

    const auto images = list_images(image_dir);
    std::vector<std::optional<DatasetSource>> loaded(images.size());
    std::vector<std::string> errors(images.size());
    parallel_for(images.size(), o.jobs, [&](std::size_t i) {
        const auto& path = images[i];
        try {
            ImageMeta meta;
            auto img = load_gray(path, &meta);
            if (!img.pitch_um()) throw MetadataError("missing sidecar " + sidecar_path(path).string());
            auto mask_path = mask_dir / path.filename();
            if (!fs::exists(mask_path)) mask_path = mask_dir / (path.stem().string() + ".png");
            auto mask = load_mask(mask_path);
            loaded[i] = DatasetSource{meta.source_id, std::move(img), std::move(mask)};
        } catch (const std::exception& e) {
            errors[i] = path.filename().string() + ": " + e.what();
        }
    });
    std::vector<DatasetSource> sources;
    for (auto& s : loaded) {
        if (s) sources.push_back(std::move(*s));
    }
    auto report = build_dataset(sources, config, root, o.jobs);
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';
    int failed = 0;
    for (const auto& e : errors) {
        if (!e.empty()) {
            err << "error: " << e << '\n';
            ++failed;
        }
    }
    for (const auto& e : report.errors) {
        err << "error: " << e << '\n';
        ++failed;
    }
    std::array<std::size_t, 3> per_split{};
    for (const auto& r : report.manifest.records) ++per_split[static_cast<std::size_t>(r.split)];
    out << report.manifest.records.size() << " items from " << sources.size() - report.errors.size()
        << " source(s): train " << per_split[0] << ", val " << per_split[1] << ", test " << per_split[2] << '\n';
    return failed ? kExitItemFailed : kExitOk;
}

// --- rf-train / rf-predict ---

struct TrainOptions {
    std::string input;
    std::string out;
    std::uint64_t seed = 0;
    int jobs = 1;
    int trees = 200;
    int mtry = 2;
    int per_class = kDefaultSamplesPerClass;
    int max_images = 30;
    std::string split = "train";
    bool force = false;
};

std::vector<LabeledImage> training_images(const TrainOptions& o) {
    const fs::path root = o.input;
    std::vector<std::pair<fs::path, fs::path>> pairs;
    if (fs::exists(root / "manifest.json")) {
        const auto manifest = DatasetManifest::from_json(read_text(root / "manifest.json"));
        const auto split = parse_split(o.split);
        if (!split) throw UsageError("unknown split '" + o.split + "'");
        for (const auto& r : manifest.records) {
            if (r.split == *split && r.augmentation == Augmentation::None) {
                pairs.emplace_back(root / r.image_path, root / r.mask_path);
            }
        }
    } else {
        const auto masks = list_masks(root / "masks");
        for (const auto& img : list_images(root / "images")) {
            auto it = masks.find(img.stem().string());
            if (it == masks.end()) throw UsageError("no mask for " + img.string());
            pairs.emplace_back(img, it->second);
        }
    }
    if (pairs.empty()) throw UsageError("no training images under " + o.input);
    if (static_cast<int>(pairs.size()) > o.max_images) pairs.resize(static_cast<std::size_t>(o.max_images));
    std::vector<LabeledImage> out;
    for (const auto& [img, mask] : pairs) {
        auto gray = decode_gray8(read_file(img));
        out.push_back({img.stem().string(), std::move(gray), load_mask(mask)});
    }
    return out;
}

int cmd_rf_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
    if (!o.force && fs::exists(o.out)) {
        err << "error: " << o.out << " exists (use --force to overwrite)\n";
        return kExitItemFailed;
    }
    const auto images = training_images(o);
    const auto t0 = std::chrono::steady_clock::now();
    const auto ts = sample_training(images, o.per_class, o.seed);
    double oob = 0.0;
    const auto forest = train_forest(ts, {o.trees, o.mtry, o.seed}, o.jobs, &oob);
    save_forest(forest, o.out);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << "trained " << o.trees << " trees on " << ts.rows() << " rows from " << images.size()
        << " image(s); oob error " << std::setprecision(4) << oob << "; " << std::fixed << std::setprecision(2) << secs
        << " s\n";
    return kExitOk;
}

struct PredictOptions {
    std::string forest;
    std::string input;
    std::string out;
    int jobs = 1;
    bool force = false;
};

int cmd_rf_predict(const PredictOptions& o, std::ostream& out, std::ostream& err) {
    Forest forest;
    try {
        forest = load_forest(o.forest);
    } catch (const Error& e) {
        throw UsageError(o.forest + ": " + e.what());
    }
    const auto images = list_images(o.input);
    if (images.empty()) {
        err << "warning: no images found in " << o.input << '\n';
        return kExitOk;
    }
    ensure_dir(o.out);
    std::vector<ItemLog> logs(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& path = images[i];
        try {
            const auto dest = fs::path(o.out) / (path.stem().string() + "_mask.png");
            refuse_overwrite({dest}, o.force);
            const auto img = decode_gray8(read_file(path));
            save_mask(predict(forest, extract_features(img), o.jobs), dest);
            logs[i].text = path.filename().string() + " -> " + dest.filename().string();
        } catch (const std::exception& e) {
            logs[i] = {false, "error: " + path.filename().string() + ": " + e.what()};
        }
    }
    return report_items(logs, out, err);
}

// --- eval ---

struct EvalOptions {
    std::string pred;
    std::string truth;
    std::string out;
    std::optional<double> fail_under;
    std::vector<std::string> classes{"silt", "pore"};
    std::string aggregation = "mean";
};

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
    std::vector<ClassCode> gated;
    for (const auto& name : o.classes) {
        const auto c = parse_class_name(name);
        if (!c) throw UsageError("unknown class '" + name + "'");
        gated.push_back(*c);
    }
    if (o.aggregation != "mean" && o.aggregation != "pooled") throw UsageError("--aggregation must be mean or pooled");
    const auto preds = list_masks(o.pred);
    const auto truths = list_masks(o.truth);

    int failed = 0;
    std::vector<std::string> ids;
    std::vector<ClassMask> pred_masks;
    std::vector<ClassMask> truth_masks;
    for (const auto& [key, truth_path] : truths) {
        auto it = preds.find(key);
        if (it == preds.end()) {
            err << "error: no prediction for " << key << '\n';
            ++failed;
            continue;
        }
        try {
            auto p = load_mask(it->second);
            auto t = load_mask(truth_path);
            if (!p.same_shape(t)) throw InvalidArgument("prediction and truth dimensions differ");
            ids.push_back(key);
            pred_masks.push_back(std::move(p));
            truth_masks.push_back(std::move(t));
        } catch (const std::exception& e) {
            err << "error: " << key << ": " << e.what() << '\n';
            ++failed;
        }
    }
    for (const auto& [key, path] : preds) {
        if (!truths.count(key)) err << "warning: prediction " << path.filename().string() << " has no ground truth\n";
    }
    if (ids.empty()) {
        err << "error: no prediction/truth pairs to score\n";
        return kExitItemFailed;
    }
    std::vector<ScoredPair> pairs;
    for (std::size_t i = 0; i < ids.size(); ++i) pairs.push_back({&pred_masks[i], &truth_masks[i], ids[i]});
    const auto report =
        evaluate_set(pairs, o.aggregation == "pooled" ? Aggregation::PooledPixels : Aggregation::PerImageMean);

    if (o.out.empty()) {
        out << report_to_json(report);
    } else {
        const fs::path dest = o.out;
        write_report(report, dest, dest.extension() == ".csv" ? ReportFormat::Csv : ReportFormat::Json);
    }
    out << std::setprecision(4);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto& m = report.mean_iou[c];
        (o.out.empty() ? err : out) << "iou_" << class_name(static_cast<ClassCode>(c)) << " "
                                    << (m ? std::to_string(*m) : std::string("undefined")) << '\n';
    }
    if (o.fail_under) {
        for (auto c : gated) {
            const auto& m = report.mean_iou[static_cast<std::size_t>(c)];
            if (m && *m < *o.fail_under) {
                err << "fail: " << class_name(c) << " IoU " << *m << " < " << *o.fail_under << '\n';
                ++failed;
            }
        }
    }
    return failed ? kExitItemFailed : kExitOk;
}

// --- overlay ---

struct OverlayOptions {
    std::string image;
    std::string mask;
    std::string out;
    double alpha = kDefaultOverlayAlpha;
    bool force = false;
};

int cmd_overlay(const OverlayOptions& o, std::ostream& out, std::ostream& err) {
    if (!o.force && fs::exists(o.out)) {
        err << "error: " << o.out << " exists (use --force to overwrite)\n";
        return kExitItemFailed;
    }
    const auto img = decode_gray8(read_file(o.image));
    const auto mask = load_mask(o.mask);
    save_rgba(overlay(img, mask, o.alpha), o.out);
    out << "wrote " << o.out << '\n';
    return kExitOk;
}

// --- serve ---

struct ServeOptions {
    std::string addr = "127.0.0.1:8080";
    std::string static_dir;
    int max_sessions = 8;
};

int cmd_serve(const ServeOptions& o, std::ostream& out) {
    const auto [host, port] = parse_address(o.addr);
    ServiceConfig config;
    config.max_sessions = static_cast<std::size_t>(o.max_sessions);
    TuningService service(config);
    std::optional<fs::path> static_dir;
    if (!o.static_dir.empty()) static_dir = o.static_dir;
    HttpServer server(service, static_dir);
    const int bound = server.bind(host, port);
    out << "listening on http://" << host << ":" << bound << std::endl;
    server.listen();
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Segmentation toolkit for mudrock SEM images", "mudseg"};
    app.require_subcommand(1);

    SegmentOptions seg;
    auto* segment = app.add_subcommand("segment", "Run the conventional pipeline on an image or directory");
    segment->add_option("input", seg.input, "Image file or directory")->required();
    segment->add_option("--params", seg.params, "Pipeline manifest (JSON); defaults when omitted");
    segment->add_option("--out", seg.out, "Output directory")->required();
    segment->add_option("--jobs", seg.jobs, "Parallel images")->check(CLI::PositiveNumber);
    segment->add_option("--alpha", seg.alpha, "Overlay opacity")->check(CLI::Range(0.0, 1.0));
    segment->add_flag("--force", seg.force, "Overwrite existing outputs");

    DatasetOptions ds;
    std::uint64_t ds_seed = 0;
    auto* dataset = app.add_subcommand("dataset", "Rescale, tile, augment and split a labelled corpus");
    dataset->add_option("input", ds.input, "Directory with images/ (plus .meta.json sidecars) and masks/")->required();
    dataset->add_option("--params,--config", ds.config, "Dataset config (JSON)");
    dataset->add_option("--out", ds.out, "Dataset root")->required();
    auto* ds_seed_opt = dataset->add_option("--seed", ds_seed, "Split seed (overrides the config)");
    dataset->add_option("--jobs", ds.jobs)->check(CLI::PositiveNumber);
    dataset->add_flag("--force", ds.force);

    TrainOptions tr;
    auto* rf_train = app.add_subcommand("rf-train", "Train the random-forest baseline");
    rf_train->add_option("input", tr.input, "Dataset root (manifest.json) or directory with images/ and masks/")
        ->required();
    rf_train->add_option("--out", tr.out, "Forest file (JSON)")->required();
    rf_train->add_option("--seed", tr.seed);
    rf_train->add_option("--jobs", tr.jobs)->check(CLI::PositiveNumber);
    rf_train->add_option("--trees", tr.trees)->check(CLI::PositiveNumber);
    rf_train->add_option("--mtry", tr.mtry)->check(CLI::PositiveNumber);
    rf_train->add_option("--per-class", tr.per_class, "Samples per class per image")->check(CLI::PositiveNumber);
    rf_train->add_option("--max-images", tr.max_images)->check(CLI::PositiveNumber);
    rf_train->add_option("--split", tr.split, "Manifest split to train on");
    rf_train->add_flag("--force", tr.force);

    PredictOptions pr;
    auto* rf_predict = app.add_subcommand("rf-predict", "Classify images with a trained forest");
    rf_predict->add_option("forest", pr.forest)->required();
    rf_predict->add_option("input", pr.input, "Image file or directory")->required();
    rf_predict->add_option("--out", pr.out)->required();
    rf_predict->add_option("--jobs", pr.jobs)->check(CLI::PositiveNumber);
    rf_predict->add_flag("--force", pr.force);

    EvalOptions ev;
    double fail_under = 0.0;
    auto* eval = app.add_subcommand("eval", "Score prediction masks against ground truth");
    eval->add_option("pred", ev.pred, "Prediction mask directory")->required();
    eval->add_option("truth", ev.truth, "Ground-truth mask directory")->required();
    eval->add_option("--out", ev.out, "Report path (.json or .csv); stdout when omitted");
    auto* fail_opt = eval->add_option("--fail-under", fail_under, "Exit 1 when a gated class IoU is below this");
    eval->add_option("--classes", ev.classes, "Classes gated by --fail-under")->delimiter(',');
    eval->add_option("--aggregation", ev.aggregation, "mean or pooled");

    OverlayOptions ov;
    auto* overlay_cmd = app.add_subcommand("overlay", "Render a class mask over its image");
    overlay_cmd->add_option("image", ov.image)->required()->check(CLI::ExistingFile);
    overlay_cmd->add_option("mask", ov.mask)->required()->check(CLI::ExistingFile);
    overlay_cmd->add_option("--out", ov.out)->required();
    overlay_cmd->add_option("--alpha", ov.alpha)->check(CLI::Range(0.0, 1.0));
    overlay_cmd->add_flag("--force", ov.force);

    ServeOptions sv;
    auto* serve = app.add_subcommand("serve", "Start the tuning HTTP service");
    serve->add_option("--addr", sv.addr, "host:port");
    serve->add_option("--static", sv.static_dir, "Directory of UI assets served at /");
    serve->add_option("--max-sessions", sv.max_sessions)->check(CLI::PositiveNumber);

    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        // Subcommand help is reported through the same channel.
        if (!app.get_subcommands().empty()) err << app.get_subcommands().front()->help();
        return kExitUsage;
    }

    try {
        if (*segment) return cmd_segment(seg, out, err);
        if (*dataset) {
            if (*ds_seed_opt) ds.seed = ds_seed;
            return cmd_dataset(ds, out, err);
        }
        if (*rf_train) return cmd_rf_train(tr, out, err);
        if (*rf_predict) return cmd_rf_predict(pr, out, err);
        if (*eval) {
            if (*fail_opt) ev.fail_under = fail_under;
            return cmd_eval(ev, out, err);
        }
        if (*overlay_cmd) return cmd_overlay(ov, out, err);
        if (*serve) return cmd_serve(sv, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitItemFailed;
    }
    return kExitUsage;
}

}  // namespace mudseg
